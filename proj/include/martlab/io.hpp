#pragma once

// File formats. Every float is written with 17 significant digits so that a
// write/read cycle is exact.
//
// Tree measure, CSV:          Martingale, CSV:
//   m,N,ell                     m,N,ell
//   3,4,1                       3,4,2
//   index,mass_0,...            f0,<ell values>
//   0,0.0123...                 level,atom,<m*ell values of the block under the atom>
//
// JSON forms: {"m","N","ell","leaves":[[mass components] per leaf]} and
// {"m","N","ell","f0":[...],"blocks":[{"level","atom","values"}]}.
// W: {"m","ell","k","basis":[[m*ell row-major] x k]}.
// Fibers: {"factors":[...],"ell","fibers":[{"gamma","basis":[[[re,im] x ell] per vector]}]}.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>

#include "martlab/filtration.hpp"
#include "martlab/groupfourier.hpp"
#include "martlab/spacew.hpp"

namespace martlab {

/// Thrown for malformed input files.
struct FormatError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

[[nodiscard]] std::string format_double(double x);

/// 64-bit FNV-1a.
[[nodiscard]] std::uint64_t fnv1a(const std::string& bytes);
[[nodiscard]] std::string hex64(std::uint64_t x);

void write_measure_csv(std::ostream& os, const TreeMeasure& mu);
void write_measure_json(std::ostream& os, const TreeMeasure& mu);
void write_martingale_csv(std::ostream& os, const Martingale& f);
void write_martingale_json(std::ostream& os, const Martingale& f);
void write_w_json(std::ostream& os, const SubspaceW& w);
void write_fibers_json(std::ostream& os, const FiniteAbelianGroup& g, const FiberFamily& fibers);

/// Format chosen by a leading '{' (JSON) or otherwise CSV.
[[nodiscard]] TreeMeasure parse_measure(const std::string& text);
[[nodiscard]] Martingale parse_martingale(const std::string& text);
[[nodiscard]] SubspaceW parse_w(const std::string& text);
[[nodiscard]] std::pair<FiniteAbelianGroup, FiberFamily> parse_fibers(const std::string& text);

/// Whole file as a string; throws FormatError if it cannot be opened.
[[nodiscard]] std::string read_file(const std::string& path);
[[nodiscard]] TreeMeasure read_measure(const std::string& path);
[[nodiscard]] Martingale read_martingale(const std::string& path);
[[nodiscard]] SubspaceW read_w(const std::string& path);
[[nodiscard]] std::pair<FiniteAbelianGroup, FiberFamily> read_fibers(const std::string& path);

}  // namespace martlab
