#pragma once

#include <iosfwd>
#include <string>

#include "msl/chains.hpp"

namespace msl {

enum class SampleFormat { text, binary };

/// Binary files start with these 8 bytes, NUL-padded to 16.
inline constexpr char kSampleMagic[] = "MSLSAMP1";

/// Text: `# ` comment lines (provenance), then `n=<int> M=<int> seed=<u64> chain=<name>`,
/// then one sample per line as space-separated +-1 values.
void write_samples_text(std::ostream& out, const SampleSet& samples);
/// Binary: 16-byte magic, u64 LE n, u64 LE M, then ceil(n/8) bytes per sample
/// with bit i of byte i/8 (LSB first) set for spin i = +1.
void write_samples_binary(std::ostream& out, const SampleSet& samples);

SampleSet read_samples_text(std::istream& in);
SampleSet read_samples_binary(std::istream& in);
/// Detects the format from the leading bytes.
SampleSet read_samples(std::istream& in);

void write_samples(const std::string& path, const SampleSet& samples, SampleFormat format);
SampleSet read_samples(const std::string& path);

}  // namespace msl
