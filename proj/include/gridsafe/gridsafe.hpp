#pragma once

#include "gridsafe/error.hpp"
#include "gridsafe/io.hpp"
#include "gridsafe/grid/case.hpp"
#include "gridsafe/grid/limits.hpp"
#include "gridsafe/grid/power_flow.hpp"
#include "gridsafe/grid/topology.hpp"
#include "gridsafe/env/action.hpp"
#include "gridsafe/env/chronics.hpp"
#include "gridsafe/env/environment.hpp"
#include "gridsafe/env/reward.hpp"
#include "gridsafe/replay/advisor.hpp"
#include "gridsafe/replay/buffer.hpp"
#include "gridsafe/replay/prompt.hpp"
#include "gridsafe/replay/proposal.hpp"
#include "gridsafe/replay/refine.hpp"
#include "gridsafe/learner/checkpoint.hpp"
#include "gridsafe/learner/features.hpp"
#include "gridsafe/learner/mlp.hpp"
#include "gridsafe/learner/safety_sac.hpp"
#include "gridsafe/learner/trainer.hpp"
#include "gridsafe/eval/metrics.hpp"
#include "gridsafe/eval/report.hpp"
#include "gridsafe/eval/rollout.hpp"
#include "gridsafe/cli/run_config.hpp"
