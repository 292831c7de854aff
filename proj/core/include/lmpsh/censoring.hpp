#pragma once

#include "lmpsh/dataset.hpp"
#include "lmpsh/step_function.hpp"

namespace lmpsh {

/// Kaplan-Meier estimate of P(C > t).
///
/// Random censorings are the "events"; failures of any cause and administrative
/// censorings are treated as censored. At tied times failures leave the risk set
/// before censoring happens. Jumps occur only at observed random-censoring times.
StepFunction km_censoring(const SurvivalDataset& ds);

}  // namespace lmpsh
