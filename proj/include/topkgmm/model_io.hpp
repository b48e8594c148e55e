#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "topkgmm/core.hpp"
#include "topkgmm/mnl.hpp"

namespace topk {

using AnyModel = std::variant<TopKGMM, MNLModel>;

void write_model(std::ostream& out, const TopKGMM& model);
void write_model(std::ostream& out, const MNLModel& model);
void save_model(const AnyModel& model, const std::string& path);

/// Throws Malformed for truncated or inconsistent input and VersionMismatch
/// for an unknown first line.
AnyModel read_model(std::istream& in);
AnyModel load_model(const std::string& path);

}  // namespace topk
