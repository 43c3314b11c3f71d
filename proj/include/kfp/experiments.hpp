#pragma once

#include <iosfwd>
#include <string>

#include "kfp/io.hpp"
#include "kfp/operator.hpp"
#include "kfp/state.hpp"

namespace kfp {

// operator assembled from the grid.* / potential.* / weight.s keys;
// potential.c = 0 (the default) runs without a potential
KfpOperator operator_from_config(const Config& cfg);

// localized row-0 data named by a descriptor key: gaussian (default) or
// odd-gaussian, optionally scaled by <key>.width
State data_from_config(const KfpOperator& op, const Config& cfg, const std::string& key);

// each runner writes its tables under out_dir, creating it if needed
void run_spectrum(const Config& cfg, const std::string& out_dir);
void run_pseudospectrum(const Config& cfg, const std::string& out_dir);
void run_threshold(const Config& cfg, const std::string& out_dir);
void run_decay(const Config& cfg, const std::string& out_dir);
void run_contour(const Config& cfg, const std::string& out_dir, std::ostream& log);

} // namespace kfp
