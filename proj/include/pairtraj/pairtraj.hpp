// pairtraj.hpp — umbrella header

#pragma once

#include "pairtraj/common.hpp"
#include "pairtraj/config.hpp"
#include "pairtraj/engine_skew.hpp"
#include "pairtraj/engine_symmetric.hpp"
#include "pairtraj/estimator.hpp"
#include "pairtraj/hilbert.hpp"
#include "pairtraj/io.hpp"
#include "pairtraj/model.hpp"
#include "pairtraj/oracle.hpp"
#include "pairtraj/rng.hpp"
#include "pairtraj/run.hpp"
