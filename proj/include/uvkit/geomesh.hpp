#pragma once

#include "uvkit/geomesh/clip.hpp"
#include "uvkit/geomesh/contour.hpp"
#include "uvkit/geomesh/io.hpp"
#include "uvkit/geomesh/mask.hpp"
#include "uvkit/geomesh/morphology.hpp"
#include "uvkit/geomesh/pole.hpp"
#include "uvkit/geomesh/polygon.hpp"
#include "uvkit/geomesh/simplify.hpp"
