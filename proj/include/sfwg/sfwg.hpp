#pragma once

#include "sfwg/analysis.hpp"
#include "sfwg/assembly.hpp"
#include "sfwg/basis.hpp"
#include "sfwg/common.hpp"
#include "sfwg/mesh.hpp"
#include "sfwg/mesh_io.hpp"
#include "sfwg/problem.hpp"
#include "sfwg/projection.hpp"
#include "sfwg/quadrature.hpp"
#include "sfwg/validate.hpp"
#include "sfwg/weak_gradient.hpp"
