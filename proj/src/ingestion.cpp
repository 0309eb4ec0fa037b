#include "mrregger/ingestion.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "mrregger/error.hpp"
#include "mrregger/normal.hpp"

namespace mrregger::ingest {

namespace {

/// Line reader over plain or gzip-compressed files (zlib reads both).
class LineReader {
 public:
  explicit LineReader(const std::string& path) : file_(gzopen(path.c_str(), "rb"), &gzclose) {
    if (!file_) throw InputError("cannot open file '" + path + "'");
  }

  bool next(std::string& line) {
    line.clear();
    char buf[8192];
    while (gzgets(file_.get(), buf, sizeof(buf)) != nullptr) {
      line.append(buf);
      if (!line.empty() && line.back() == '\n') break;
    }
    if (line.empty()) return false;
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    return true;
  }

 private:
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file_;
};

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool is_missing(std::string_view field) {
  return field.empty() || field == "NA" || field == "." || field == "nan" || field == "NaN";
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

char parse_allele(std::string_view field) {
  if (field.size() != 1) return 0;
  const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(field[0])));
  return (c == 'A' || c == 'C' || c == 'G' || c == 'T') ? c : 0;
}

char complement(char a) {
  switch (a) {
    case 'A': return 'T';
    case 'T': return 'A';
    case 'C': return 'G';
    case 'G': return 'C';
  }
  return 0;
}

bool is_palindromic(char a, char b) { return complement(a) == b; }

}  // namespace

ParseResult parse_gwas(const std::string& path, const FormatSpec& format) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) throw InputError("empty file '" + path + "'");
  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  const auto header = split(line, delim);

  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  auto require = [&](const std::string& name) {
    const auto idx = find(name);
    if (!idx) throw InputError("missing column '" + name + "' in '" + path + "'");
    return *idx;
  };
  const std::size_t c_snp = require(format.snp);
  const std::size_t c_ea = require(format.effect_allele);
  const std::size_t c_oa = require(format.other_allele);
  const std::size_t c_eaf = require(format.eaf);
  const std::size_t c_beta = require(format.beta);
  const std::size_t c_se = require(format.se);
  const std::size_t c_p = require(format.pval);
  const auto c_chrom = format.chrom ? std::optional(require(*format.chrom)) : find("CHR");
  const auto c_pos = format.pos ? std::optional(require(*format.pos)) : find("BP");

  ParseResult result;
  std::size_t line_no = 1;
  while (reader.next(line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, delim);
    auto error = [&](std::string message) { result.errors.push_back({line_no, std::move(message)}); };
    if (fields.size() != header.size()) {
      error("expected " + std::to_string(header.size()) + " fields, found " +
            std::to_string(fields.size()));
      continue;
    }
    std::vector<std::size_t> used{c_snp, c_ea, c_oa, c_eaf, c_beta, c_se, c_p};
    if (c_chrom) used.push_back(*c_chrom);
    if (c_pos) used.push_back(*c_pos);
    if (std::any_of(used.begin(), used.end(), [&](std::size_t c) { return is_missing(fields[c]); })) {
      ++result.missing;
      continue;
    }

    RawGwasRecord r;
    r.snp_id = std::string(fields[c_snp]);
    r.effect_allele = parse_allele(fields[c_ea]);
    r.other_allele = parse_allele(fields[c_oa]);
    if (!r.effect_allele || !r.other_allele) {
      error("invalid allele");
      continue;
    }
    if (r.effect_allele == r.other_allele) {
      error("identical alleles");
      continue;
    }
    if (c_chrom) r.chrom = normalize_chrom(std::string(fields[*c_chrom]));
    if (c_pos && !parse_number(fields[*c_pos], r.pos)) {
      error("unparseable position '" + std::string(fields[*c_pos]) + "'");
      continue;
    }
    if (!parse_number(fields[c_eaf], r.eaf) || !parse_number(fields[c_beta], r.beta) ||
        !parse_number(fields[c_se], r.se) || !parse_number(fields[c_p], r.pval)) {
      error("unparseable numeric field");
      continue;
    }
    if (!(r.eaf >= 0 && r.eaf <= 1)) {
      error("eaf out of range");
      continue;
    }
    if (!std::isfinite(r.beta)) {
      error("nonfinite beta");
      continue;
    }
    if (!(r.se > 0) || !std::isfinite(r.se)) {
      error("nonpositive se");
      continue;
    }
    if (!(r.pval > 0 && r.pval <= 1)) {
      error("pval out of range");
      continue;
    }
    result.records.push_back(std::move(r));
  }
  return result;
}

void write_gwas(const std::string& path, const std::vector<RawGwasRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  const bool with_position = std::any_of(records.begin(), records.end(),
                                         [](const RawGwasRecord& r) { return !r.chrom.empty(); });
  out << (with_position ? "SNP\tCHR\tBP\tA1\tA2\tEAF\tBETA\tSE\tP\n" : "SNP\tA1\tA2\tEAF\tBETA\tSE\tP\n");
  for (const auto& r : records) {
    out << r.snp_id << '\t';
    if (with_position) out << r.chrom << '\t' << r.pos << '\t';
    out << r.effect_allele << '\t' << r.other_allele << '\t' << format_double(r.eaf) << '\t'
        << format_double(r.beta) << '\t' << format_double(r.se) << '\t' << format_double(r.pval)
        << '\n';
  }
}

std::string normalize_chrom(const std::string& chrom) {
  if (chrom.size() > 3 && (chrom.rfind("chr", 0) == 0 || chrom.rfind("CHR", 0) == 0)) {
    return chrom.substr(3);
  }
  return chrom;
}

std::pair<std::vector<RawGwasRecord>, HarmonizationLog> qc_filter(
    const std::vector<RawGwasRecord>& records, double maf_min,
    const std::vector<Region>& exclude_regions) {
  HarmonizationLog log;
  log.input = records.size();
  std::vector<RawGwasRecord> kept;
  for (const auto& r : records) {
    if (std::min(r.eaf, 1.0 - r.eaf) < maf_min) {
      ++log.dropped_maf;
      continue;
    }
    const auto chrom = normalize_chrom(r.chrom);
    const bool in_region = std::any_of(exclude_regions.begin(), exclude_regions.end(), [&](const Region& g) {
      return normalize_chrom(g.chrom) == chrom && r.pos >= g.start && r.pos <= g.end;
    });
    if (in_region) {
      ++log.dropped_region;
      continue;
    }
    kept.push_back(r);
  }
  log.kept = kept.size();
  return {std::move(kept), log};
}

std::unordered_set<std::string> load_snp_whitelist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read whitelist '" + path + "'");
  std::unordered_set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) ids.insert(line);
  }
  if (ids.empty()) throw InputError("empty whitelist");
  return ids;
}

std::vector<RawGwasRecord> filter_whitelist(const std::vector<RawGwasRecord>& records,
                                            const std::unordered_set<std::string>& ids) {
  std::vector<RawGwasRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const RawGwasRecord& r) { return ids.contains(r.snp_id); });
  return out;
}

std::pair<HarmonizedDataset, HarmonizationLog> harmonize(const std::vector<RawGwasRecord>& exposure,
                                                         const std::vector<RawGwasRecord>& outcome,
                                                         const HarmonizeOptions& options) {
  std::unordered_map<std::string, std::size_t> outcome_index;
  for (std::size_t i = 0; i < outcome.size(); ++i) outcome_index.emplace(outcome[i].snp_id, i);

  HarmonizationLog log;
  log.input = exposure.size();
  std::unordered_set<std::string> seen;
  std::vector<SnpSummary> snps;
  HarmonizedDataset h;
  const double thr = options.palindrome_threshold;

  for (const auto& x : exposure) {
    const auto it = outcome_index.find(x.snp_id);
    if (it == outcome_index.end() || !seen.insert(x.snp_id).second) {
      ++log.dropped_unmatched;
      continue;
    }
    const auto& y = outcome[it->second];
    double out_beta = y.beta;
    double out_eaf = y.eaf;

    if (is_palindromic(x.effect_allele, x.other_allele)) {
      const bool same_pair = (y.effect_allele == x.effect_allele && y.other_allele == x.other_allele) ||
                             (y.effect_allele == x.other_allele && y.other_allele == x.effect_allele);
      if (!same_pair) {
        ++log.dropped_mismatch;
        continue;
      }
      if (std::abs(x.eaf - 0.5) <= thr || std::abs(y.eaf - 0.5) <= thr) {
        ++log.dropped_ambiguous;
        continue;
      }
      // Strand cannot be read from the letters; the counted alleles match
      // when both frequencies sit on the same side of 0.5.
      if ((x.eaf > 0.5) != (y.eaf > 0.5)) {
        out_beta = -out_beta;
        out_eaf = 1.0 - out_eaf;
      }
    } else {
      auto align = [&](char ea, char oa) -> int {
        if (ea == x.effect_allele && oa == x.other_allele) return 1;
        if (ea == x.other_allele && oa == x.effect_allele) return -1;
        return 0;
      };
      int sign = align(y.effect_allele, y.other_allele);
      if (sign == 0) sign = align(complement(y.effect_allele), complement(y.other_allele));
      if (sign == 0) {
        ++log.dropped_mismatch;
        continue;
      }
      if (sign < 0) {
        out_beta = -out_beta;
        out_eaf = 1.0 - out_eaf;
      }
    }

    double gamma = x.beta;
    double eaf_x = x.eaf;
    char ea = x.effect_allele, oa = x.other_allele;
    const bool flip = eaf_x > 0.5;
    if (flip) {
      gamma = -gamma;
      out_beta = -out_beta;
      eaf_x = 1.0 - eaf_x;
      out_eaf = 1.0 - out_eaf;
      std::swap(ea, oa);
      ++log.flipped;
    }
    snps.push_back({x.snp_id, gamma, x.se, out_beta, y.se});
    h.effect_allele.push_back(ea);
    h.other_allele.push_back(oa);
    h.eaf_exposure.push_back(eaf_x);
    h.eaf_outcome.push_back(out_eaf);
    h.flipped.push_back(flip);
  }
  if (snps.empty()) throw InputError("no common instruments");
  log.kept = snps.size();
  h.data = SummaryDataset::from_records(snps, "harmonized; minor-allele oriented");
  return {std::move(h), log};
}

std::pair<std::vector<RawGwasRecord>, std::vector<RawGwasRecord>> to_records(
    const HarmonizedDataset& h) {
  std::vector<RawGwasRecord> x, y;
  const auto& d = h.data;
  auto pval = [](double beta, double se) {
    return std::max(1e-300, 2.0 * normal::ccdf(std::abs(beta / se)));
  };
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    x.push_back({d.ids()[k], "", 0, h.effect_allele[k], h.other_allele[k], h.eaf_exposure[k],
                 d.gamma_hat()[i], d.sigma_x()[i], pval(d.gamma_hat()[i], d.sigma_x()[i])});
    y.push_back({d.ids()[k], "", 0, h.effect_allele[k], h.other_allele[k], h.eaf_outcome[k],
                 d.big_gamma_hat()[i], d.sigma_y()[i], pval(d.big_gamma_hat()[i], d.sigma_y()[i])});
  }
  return {std::move(x), std::move(y)};
}

std::string harmonized_tsv(const HarmonizedDataset& h) {
  std::ostringstream out;
  out << "snp_id\tgamma_hat\tsigma_x\tbig_gamma_hat\tsigma_y\teaf_exposure\tflipped\n";
  const auto& d = h.data;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double eaf = k < h.eaf_exposure.size() ? h.eaf_exposure[k] : std::nan("");
    out << d.ids()[k] << '\t' << format_double(d.gamma_hat()[i]) << '\t'
        << format_double(d.sigma_x()[i]) << '\t' << format_double(d.big_gamma_hat()[i]) << '\t'
        << format_double(d.sigma_y()[i]) << '\t' << (std::isnan(eaf) ? "NA" : format_double(eaf))
        << '\t' << (k < h.flipped.size() && h.flipped[k] ? 1 : 0) << '\n';
  }
  return out.str();
}

void write_harmonized_tsv(const std::string& path, const HarmonizedDataset& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << harmonized_tsv(h);
}

HarmonizedDataset read_harmonized_tsv(const std::string& path) {
  LineReader reader(path);
  std::string line;
  static const char* kHeader = "snp_id\tgamma_hat\tsigma_x\tbig_gamma_hat\tsigma_y\teaf_exposure\tflipped";
  if (!reader.next(line) || line != kHeader) {
    throw InputError("'" + path + "' is not a harmonized dataset (unexpected header)");
  }
  std::vector<SnpSummary> snps;
  HarmonizedDataset h;
  std::size_t line_no = 1;
  while (reader.next(line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    SnpSummary s;
    double eaf = std::nan("");
    int flipped = 0;
    const bool ok = f.size() == 7 && parse_number(f[1], s.gamma_hat) && parse_number(f[2], s.sigma_x) &&
                    parse_number(f[3], s.big_gamma_hat) && parse_number(f[4], s.sigma_y) &&
                    (f[5] == "NA" || parse_number(f[5], eaf)) && parse_number(f[6], flipped);
    if (!ok) throw InputError(path + ":" + std::to_string(line_no) + ": malformed row");
    s.snp_id = std::string(f[0]);
    snps.push_back(std::move(s));
    h.eaf_exposure.push_back(eaf);
    h.flipped.push_back(flipped != 0);
  }
  h.data = SummaryDataset::from_records(snps, "read from " + path);
  // sigma_x == 0 (exactly known exposure effects) is accepted here; every
  // other dataset invariant is enforced.
  for (const auto& f : validate_dataset(h.data)) {
    const auto it = std::find_if(snps.begin(), snps.end(), [&](const SnpSummary& s) { return s.snp_id == f.snp_id; });
    if (f.reason == "nonpositive sigma_x" && it != snps.end() && it->sigma_x == 0) continue;
    throw InputError(path + ": invalid SNP " + f.snp_id + ": " + f.reason);
  }
  return h;
}

}  // namespace mrregger::ingest
