#pragma once

#include "errors.hpp"
#include "tolerances.hpp"
#include "rng.hpp"
#include "graph.hpp"
#include "markov.hpp"
#include "disagreement.hpp"
#include "simulate.hpp"
#include "formation.hpp"
