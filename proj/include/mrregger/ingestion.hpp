#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mrregger/core.hpp"

namespace mrregger::ingest {

/// One row of a GWAS summary-statistics file.
struct RawGwasRecord {
  std::string snp_id;
  std::string chrom;
  std::int64_t pos{0};
  char effect_allele{'N'};
  char other_allele{'N'};
  double eaf{0};
  double beta{0};
  double se{0};
  double pval{1};

  bool operator==(const RawGwasRecord&) const = default;
};

/// Header names of the columns to read. Chromosome and position are optional:
/// when unset, "CHR"/"BP" are used if present and left empty otherwise.
struct FormatSpec {
  std::string snp{"SNP"};
  std::string effect_allele{"A1"};
  std::string other_allele{"A2"};
  std::string eaf{"EAF"};
  std::string beta{"BETA"};
  std::string se{"SE"};
  std::string pval{"P"};
  std::optional<std::string> chrom;
  std::optional<std::string> pos;
};

struct RowError {
  std::size_t line{0};
  std::string message;
};

struct ParseResult {
  std::vector<RawGwasRecord> records;
  std::vector<RowError> errors;
  std::size_t missing{0};  // rows skipped for NA / empty fields
};

/// Streaming parse of a tab- or comma-separated file (gzip accepted). Missing
/// mapped columns are fatal; malformed rows are reported with line numbers.
ParseResult parse_gwas(const std::string& path, const FormatSpec& format = {});

/// Writes records with the default FormatSpec header (tab separated). CHR/BP
/// columns are emitted only when some record carries a chromosome.
void write_gwas(const std::string& path, const std::vector<RawGwasRecord>& records);

struct HarmonizationLog {
  std::size_t input{0};
  std::size_t kept{0};
  std::size_t dropped_missing{0};
  std::size_t dropped_maf{0};
  std::size_t dropped_region{0};
  std::size_t dropped_whitelist{0};
  std::size_t dropped_unmatched{0};   // not present in both files
  std::size_t dropped_mismatch{0};    // allele pairs irreconcilable
  std::size_t dropped_ambiguous{0};   // palindromic, frequency too close to 0.5
  std::size_t flipped{0};             // minor-allele reorientations
};

struct Region {
  std::string chrom;
  std::int64_t start{0};
  std::int64_t end{0};
};

/// Major histocompatibility region, chromosome 6, 26-34 Mb.
inline Region mhc_region() { return {"6", 26'000'000, 34'000'000}; }

/// Strips a leading "chr" so "chr6" and "6" compare equal.
std::string normalize_chrom(const std::string& chrom);

/// Drops records whose minor-allele frequency is below `maf_min` or which fall
/// inside any excluded region (inclusive bounds).
std::pair<std::vector<RawGwasRecord>, HarmonizationLog> qc_filter(
    const std::vector<RawGwasRecord>& records, double maf_min = 0.01,
    const std::vector<Region>& exclude_regions = {mhc_region()});

std::unordered_set<std::string> load_snp_whitelist(const std::string& path);

/// Order-preserving filter keeping whitelisted ids.
std::vector<RawGwasRecord> filter_whitelist(const std::vector<RawGwasRecord>& records,
                                            const std::unordered_set<std::string>& ids);

struct HarmonizeOptions {
  double palindrome_threshold{0.08};
};

/// Exposure-aligned dataset plus per-SNP allele bookkeeping. Alleles and
/// frequencies describe the counted (minor, after orientation) allele.
struct HarmonizedDataset {
  SummaryDataset data;
  std::vector<char> effect_allele;
  std::vector<char> other_allele;
  std::vector<double> eaf_exposure;
  std::vector<double> eaf_outcome;
  std::vector<bool> flipped;
};

/// Inner join on snp_id, outcome alleles aligned to the exposure (allele swap,
/// strand complement, frequency-resolved palindromes), then minor-allele
/// orientation of both associations. Output follows exposure file order.
std::pair<HarmonizedDataset, HarmonizationLog> harmonize(const std::vector<RawGwasRecord>& exposure,
                                                         const std::vector<RawGwasRecord>& outcome,
                                                         const HarmonizeOptions& options = {});

/// Splits a harmonized dataset back into aligned exposure/outcome records.
std::pair<std::vector<RawGwasRecord>, std::vector<RawGwasRecord>> to_records(
    const HarmonizedDataset& h);

/// Canonical interchange TSV: snp_id, gamma_hat, sigma_x, big_gamma_hat,
/// sigma_y, eaf_exposure, flipped.
void write_harmonized_tsv(const std::string& path, const HarmonizedDataset& h);
std::string harmonized_tsv(const HarmonizedDataset& h);

/// Reads the canonical TSV. eaf_exposure and flipped are returned alongside.
HarmonizedDataset read_harmonized_tsv(const std::string& path);

}  // namespace mrregger::ingest
