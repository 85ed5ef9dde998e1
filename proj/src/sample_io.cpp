#include "msl/sample_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace msl {

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw InvalidArgument("sample file: truncated binary header");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(value, &pos);
    if (pos != value.size() || value.front() == '-') throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("sample file: bad value for " + key + ": '" + value + "'");
  }
}

}  // namespace

void write_samples_text(std::ostream& out, const SampleSet& samples) {
  samples.validate();
  std::istringstream prov(samples.provenance);
  for (std::string line; std::getline(prov, line);) out << "# " << line << '\n';
  out << "n=" << samples.n << " M=" << samples.size() << " seed=" << samples.seed << " chain=" << samples.chain
      << '\n';
  std::string row;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    row.clear();
    for (auto x : samples.row(t)) {
      if (!row.empty()) row += ' ';
      row += x > 0 ? "1" : "-1";
    }
    out << row << '\n';
  }
}

void write_samples_binary(std::ostream& out, const SampleSet& samples) {
  samples.validate();
  std::array<char, 16> magic{};
  std::memcpy(magic.data(), kSampleMagic, 8);
  out.write(magic.data(), 16);
  put_u64(out, static_cast<std::uint64_t>(samples.n));
  put_u64(out, samples.size());
  const std::size_t bytes = (static_cast<std::size_t>(samples.n) + 7) / 8;
  std::vector<char> packed(bytes);
  for (std::size_t t = 0; t < samples.size(); ++t) {
    std::fill(packed.begin(), packed.end(), 0);
    const auto r = samples.row(t);
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i] > 0) packed[i / 8] = static_cast<char>(packed[i / 8] | (1 << (i % 8)));
    out.write(packed.data(), static_cast<std::streamsize>(bytes));
  }
}

SampleSet read_samples_text(std::istream& in) {
  SampleSet out;
  std::string line;
  bool have_header = false;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.erase(0, 1);
      if (!out.provenance.empty()) out.provenance += '\n';
      out.provenance += body;
      continue;
    }
    have_header = true;
    std::istringstream hs(line);
    bool has_n = false, has_m = false;
    for (std::string tok; hs >> tok;) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw InvalidArgument("sample file: malformed header token '" + tok + "'");
      const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
      if (key == "n") {
        out.n = static_cast<int>(parse_u64(key, value));
        has_n = true;
      } else if (key == "M") {
        expected = parse_u64(key, value);
        has_m = true;
      } else if (key == "seed") {
        out.seed = parse_u64(key, value);
      } else if (key == "chain") {
        out.chain = value;
      } else {
        throw InvalidArgument("sample file: unknown header key '" + key + "'");
      }
    }
    if (!has_n || !has_m) throw InvalidArgument("sample file: header must give n and M");
    if (out.n <= 0) throw InvalidArgument("sample file: n must be positive");
    break;
  }
  if (!have_header) throw InvalidArgument("sample file: missing header line");

  out.data.reserve(expected * static_cast<std::size_t>(out.n));
  std::vector<std::int8_t> row;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    row.clear();
    std::istringstream rs(line);
    for (int v; rs >> v;) {
      if (v != 1 && v != -1) throw InvalidArgument("sample file: spin values must be +1 or -1");
      row.push_back(static_cast<std::int8_t>(v));
    }
    if (!rs.eof()) throw InvalidArgument("sample file: non-integer token in sample row");
    if (static_cast<int>(row.size()) != out.n)
      throw InvalidArgument("sample file: row " + std::to_string(out.size() + 1) + " has " +
                            std::to_string(row.size()) + " spins, expected " + std::to_string(out.n));
    out.push_back(row);
  }
  if (out.size() != expected)
    throw InvalidArgument("sample file: header says M=" + std::to_string(expected) + " but found " +
                          std::to_string(out.size()) + " rows");
  return out;
}

SampleSet read_samples_binary(std::istream& in) {
  std::array<char, 16> magic{};
  if (!in.read(magic.data(), 16) || std::memcmp(magic.data(), kSampleMagic, 8) != 0)
    throw InvalidArgument("sample file: bad binary magic");
  SampleSet out;
  const auto n = get_u64(in);
  const auto m = get_u64(in);
  if (n == 0 || n > (1U << 30)) throw InvalidArgument("sample file: invalid n in binary header");
  out.n = static_cast<int>(n);
  out.chain = "binary";
  const std::size_t bytes = (static_cast<std::size_t>(n) + 7) / 8;
  std::vector<unsigned char> packed(bytes);
  std::vector<std::int8_t> row(static_cast<std::size_t>(n));
  out.data.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
  for (std::uint64_t t = 0; t < m; ++t) {
    if (!in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(bytes)))
      throw InvalidArgument("sample file: truncated binary payload");
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = ((packed[i / 8] >> (i % 8)) & 1) ? 1 : -1;
    out.push_back(row);
  }
  return out;
}

SampleSet read_samples(std::istream& in) {
  std::array<char, 8> head{};
  in.read(head.data(), 8);
  const auto got = in.gcount();
  in.clear();
  in.seekg(0);
  if (got == 8 && std::memcmp(head.data(), kSampleMagic, 8) == 0) return read_samples_binary(in);
  return read_samples_text(in);
}

void write_samples(const std::string& path, const SampleSet& samples, SampleFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  if (format == SampleFormat::binary) write_samples_binary(out, samples);
  else write_samples_text(out, samples);
  if (!out) throw InvalidArgument("write to '" + path + "' failed");
}

SampleSet read_samples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open sample file '" + path + "'");
  return read_samples(in);
}

}  // namespace msl
