#pragma once

// Umbrella header for the whole library.

#include "cprand/io.hpp"
#include "cprand/kr_linalg.hpp"
#include "cprand/kruskal.hpp"
#include "cprand/mixing.hpp"
#include "cprand/rng.hpp"
#include "cprand/sampling.hpp"
#include "cprand/solver.hpp"
#include "cprand/synth.hpp"
#include "cprand/tensor.hpp"
#include "cprand/transforms.hpp"
#include "cprand/types.hpp"
