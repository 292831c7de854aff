#pragma once

#include <string>

#include "lmpsh/fine_gray.hpp"
#include "lmpsh/supermodel.hpp"

namespace lmpsh {

/// Model exchange format. Doubles are written in shortest round-trip form, so a
/// reloaded fit predicts bit-identically.
std::string to_json(const PSHFit& fit);
std::string to_json(const SupermodelFit& fit);

PSHFit psh_fit_from_json(const std::string& text);
SupermodelFit supermodel_fit_from_json(const std::string& text);

/// "psh" or "supermodel", read from the "type" field.
std::string model_type_of_json(const std::string& text);

}  // namespace lmpsh
