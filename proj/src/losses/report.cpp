#include "attnkd/losses/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace attnkd::losses {

bool LossReport::all_finite() const {
    for (double v : {adv_D, adv_G, cls, rec, att, gp, total_D, total_G, cls_G})
        if (!std::isfinite(v)) return false;
    return true;
}

double LossReport::recompose_error(const LossWeights& w, bool att_in_objective) const {
    LossWeights eff = w;
    if (!att_in_objective) eff.lambda_att = 0.0f;
    const Totals t = student_objectives(adv_D, cls, adv_G, cls_G, rec, att, eff);
    const double ed = std::fabs(t.total_D - total_D) / std::max(1.0, std::fabs(total_D));
    const double eg = std::fabs(t.total_G - total_G) / std::max(1.0, std::fabs(total_G));
    return std::max(ed, eg);
}

std::string csv_header() {
    std::string h;
    for (const char* c : kLossColumns) h += (h.empty() ? "" : ",") + std::string(c);
    return h;
}

namespace {

// Shortest round-trip representation.
std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
}

}  // namespace

std::string to_csv_row(const LossReport& r) {
    std::string row = std::to_string(r.step);
    for (double v : {r.adv_D, r.adv_G, r.cls, r.rec, r.att, r.gp, r.total_D, r.total_G, r.cls_G}) row += "," + fmt(v);
    row += r.g_updated ? ",1" : ",0";
    return row;
}

LossReport parse_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != kLossColumns.size())
        throw std::invalid_argument("loss row has " + std::to_string(cells.size()) + " columns, expected " +
                                    std::to_string(kLossColumns.size()));
    LossReport r;
    r.step = std::stoll(cells[0]);
    double* fields[] = {&r.adv_D, &r.adv_G, &r.cls, &r.rec, &r.att, &r.gp, &r.total_D, &r.total_G, &r.cls_G};
    for (size_t i = 0; i < 9; ++i) *fields[i] = parse_double(cells[i + 1]);
    r.g_updated = cells[10] == "1";
    return r;
}

void write_csv(std::ostream& out, const std::vector<LossReport>& history) {
    out << csv_header() << "\n";
    for (const auto& r : history) out << to_csv_row(r) << "\n";
}

std::vector<LossReport> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != csv_header()) throw std::invalid_argument("unexpected loss CSV header");
    std::vector<LossReport> out;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(parse_csv_row(line));
    return out;
}

}  // namespace attnkd::losses
