#pragma once

#include <nystrom/errors.hpp>
#include <nystrom/experiment.hpp>
#include <nystrom/kernel.hpp>
#include <nystrom/linalg.hpp>
#include <nystrom/lowrank.hpp>
#include <nystrom/points.hpp>
#include <nystrom/quadrature.hpp>
#include <nystrom/recombination.hpp>
#include <nystrom/samplers.hpp>
