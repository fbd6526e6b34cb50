#pragma once

#include <byzsgd/metrics.hpp>
#include <byzsgd/param_vector.hpp>
#include <byzsgd/variance.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace byzsgd::cli {

inline constexpr const char* kRunHeader =
    "step,sim_time,train_loss,test_accuracy,max_pairwise_dist,cos_phi_top,max_diff1,max_diff2";

/// 17 significant digits, locale-independent; "nan", "inf", "-inf" for
/// non-finite values.
std::string format_double(double value);

void write_run_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
void write_variance_csv(std::ostream& out, const VarianceReport& report);
void write_vector_row(std::ostream& out, const ParamVector& v);

/// One vector per non-empty line, comma separated. Throws ParseError on a
/// bad number and DimensionMismatch on ragged rows.
std::vector<ParamVector> read_vectors_csv(std::istream& in);

} // namespace byzsgd::cli
