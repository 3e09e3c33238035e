#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "attnkd/losses/losses.hpp"

namespace attnkd::losses {

// One training step. Generator-side columns (adv_G, cls_G, rec, att,
// total_G) hold the most recent generator update; g_updated marks the steps
// on which that update happened.
struct LossReport {
    int64_t step = 0;
    double adv_D = 0.0;  // includes lambda_gp * gp
    double adv_G = 0.0;
    double cls = 0.0;    // critic classification loss on real images
    double rec = 0.0;
    double att = 0.0;
    double gp = 0.0;
    double total_D = 0.0;
    double total_G = 0.0;
    double cls_G = 0.0;  // classification loss on translated images
    bool g_updated = false;

    bool all_finite() const;
    // Largest relative mismatch between the reported totals and their
    // recomposition from the components.
    double recompose_error(const LossWeights& w, bool att_in_objective) const;
};

inline constexpr std::array<const char*, 11> kLossColumns{"step", "adv_D", "adv_G", "cls", "rec", "att",
                                                          "gp", "total_D", "total_G", "cls_G", "g_updated"};

std::string csv_header();
std::string to_csv_row(const LossReport& r);
LossReport parse_csv_row(const std::string& line);

void write_csv(std::ostream& out, const std::vector<LossReport>& history);
std::vector<LossReport> read_csv(std::istream& in);

}  // namespace attnkd::losses
