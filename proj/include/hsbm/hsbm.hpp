#pragma once

#include "hsbm/error.hpp"
#include "hsbm/evalgen.hpp"
#include "hsbm/fit.hpp"
#include "hsbm/graph.hpp"
#include "hsbm/inference.hpp"
#include "hsbm/initprune.hpp"
#include "hsbm/io.hpp"
#include "hsbm/kernels.hpp"
#include "hsbm/rng.hpp"
#include "hsbm/tree.hpp"
