#include "latcap/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "latcap/errors.hpp"

namespace latcap {

bool SweepRecord::flagged(const std::string& tag) const {
  std::size_t start = 0;
  while (start <= flags.size()) {
    const std::size_t end = std::min(flags.find('|', start), flags.size());
    if (flags.compare(start, end - start, tag) == 0 && end - start == tag.size()) return true;
    start = end + 1;
  }
  return false;
}

void SweepRecord::add_flag(const std::string& tag) {
  if (flagged(tag)) return;
  if (!flags.empty()) flags += '|';
  flags += tag;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("malformed number in CSV: '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError("malformed number in CSV: '" + s + "'");
  return v;
}

}  // namespace

std::string csv_header(int dim) {
  std::string h = "r";
  for (int i = 1; i <= dim; ++i) h += ",z" + std::to_string(i);
  h += ",cap_a,cap_a_err,cap_b,cap_b_err,cap_union,cap_union_err,kernel,ratio,ratio_err,target,target_err,n,flags";
  return h;
}

std::string csv_row(const SweepRecord& rec) {
  std::string row = std::to_string(rec.r);
  for (int i = 0; i < rec.z.dim(); ++i) row += "," + std::to_string(rec.z[i]);
  for (double v : {rec.cap_a, rec.cap_a_err, rec.cap_b, rec.cap_b_err, rec.cap_union, rec.cap_union_err,
                   rec.kernel, rec.ratio, rec.ratio_err, rec.target, rec.target_err})
    row += "," + fmt(v);
  row += "," + std::to_string(rec.n) + "," + rec.flags;
  return row;
}

void write_csv(std::ostream& os, const std::vector<SweepRecord>& records, int dim,
               const std::vector<std::string>& header_lines) {
  for (const auto& line : header_lines) os << "# " << line << '\n';
  os << csv_header(dim) << '\n';
  for (const auto& rec : records) os << csv_row(rec) << '\n';
}

ParsedCsv parse_csv(std::istream& is) {
  ParsedCsv out;
  std::string line;
  int dim = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      out.comments.push_back(line.size() > 2 ? line.substr(2) : std::string());
      continue;
    }
    const auto cells = split(line, ',');
    if (dim < 0) {
      if (cells.empty() || cells[0] != "r") throw ConfigError("CSV header row missing");
      dim = static_cast<int>(cells.size()) - 14;
      if (dim < 1 || line != csv_header(dim)) throw ConfigError("unexpected CSV header: " + line);
      continue;
    }
    if (static_cast<int>(cells.size()) != dim + 14)
      throw ConfigError("CSV row has " + std::to_string(cells.size()) + " cells: " + line);
    SweepRecord rec;
    rec.r = std::stoi(cells[0]);
    rec.z = LatticePoint(dim);
    for (int i = 0; i < dim; ++i) rec.z[i] = std::stoi(cells[static_cast<std::size_t>(i + 1)]);
    std::size_t k = static_cast<std::size_t>(dim + 1);
    for (double* f : {&rec.cap_a, &rec.cap_a_err, &rec.cap_b, &rec.cap_b_err, &rec.cap_union,
                      &rec.cap_union_err, &rec.kernel, &rec.ratio, &rec.ratio_err, &rec.target,
                      &rec.target_err})
      *f = parse_double(cells[k++]);
    rec.n = std::stoull(cells[k++]);
    rec.flags = cells[k];
    out.records.push_back(std::move(rec));
  }
  return out;
}

ConvergenceFit fit_convergence(const std::vector<SweepRecord>& records) {
  std::vector<double> lr, ldev, x, ratio;
  std::vector<const SweepRecord*> usable;
  for (const auto& rec : records)
    if (!rec.skipped()) usable.push_back(&rec);
  if (usable.size() < 3) throw ConfigError("fit_convergence needs at least three records not skipped for overlap");

  ConvergenceFit fit;
  bool all_zero = true;
  for (const auto* rec : usable)
    if (rec->ratio != rec->target) all_zero = false;
  if (all_zero) {
    fit.degenerate = true;
    fit.limit_estimate = usable.back()->target;
    fit.slope = 0.0;
    fit.r_squared = 1.0;
    return fit;
  }
  for (const auto* rec : usable) {
    const double dev = std::abs(rec->ratio - rec->target);
    if (dev == 0.0) continue;
    lr.push_back(std::log(rec->z.norm()));
    ldev.push_back(std::log(dev));
  }
  if (lr.size() < 2) throw ConfigError("fit_convergence: too few records with ratio != target");
  const auto n = static_cast<double>(lr.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lr.size(); ++i) {
    mx += lr[i];
    my += ldev[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lr.size(); ++i) {
    sxx += (lr[i] - mx) * (lr[i] - mx);
    sxy += (lr[i] - mx) * (ldev[i] - my);
    syy += (ldev[i] - my) * (ldev[i] - my);
  }
  if (sxx == 0.0) throw ConfigError("fit_convergence: all records share one radius");
  fit.slope = sxy / sxx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;

  // ratio = L + C t with t = |z|^slope.
  double mt = 0, mq = 0;
  for (const auto* rec : usable) {
    mt += std::pow(rec->z.norm(), fit.slope);
    mq += rec->ratio;
  }
  const auto m = static_cast<double>(usable.size());
  mt /= m;
  mq /= m;
  double stt = 0, stq = 0;
  for (const auto* rec : usable) {
    const double t = std::pow(rec->z.norm(), fit.slope) - mt;
    stt += t * t;
    stq += t * (rec->ratio - mq);
  }
  const double c = stt > 0.0 ? stq / stt : 0.0;
  fit.limit_estimate = mq - c * mt;
  return fit;
}

}  // namespace latcap
