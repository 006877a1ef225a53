#ifndef DAPG_HPP
#define DAPG_HPP

#include "dapg/baseline.hpp"
#include "dapg/checkpoint.hpp"
#include "dapg/common.hpp"
#include "dapg/demo_augmented.hpp"
#include "dapg/demos.hpp"
#include "dapg/envs/registry.hpp"
#include "dapg/experts.hpp"
#include "dapg/harness/config.hpp"
#include "dapg/harness/experiment.hpp"
#include "dapg/harness/robustness.hpp"
#include "dapg/mdp.hpp"
#include "dapg/npg.hpp"
#include "dapg/policy.hpp"
#include "dapg/sampling.hpp"

#endif
