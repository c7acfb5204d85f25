#pragma once

#include "redlab/background.hpp"
#include "redlab/denoise.hpp"
#include "redlab/detect.hpp"
#include "redlab/error.hpp"
#include "redlab/fft.hpp"
#include "redlab/grid.hpp"
#include "redlab/lattice.hpp"
#include "redlab/parallel.hpp"
#include "redlab/quadform.hpp"
#include "redlab/rng.hpp"
#include "redlab/similarity.hpp"
