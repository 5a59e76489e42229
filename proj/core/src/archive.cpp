#include "affect/archive.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>

#include "affect/util.hpp"

namespace affect {

namespace {

constexpr const char* kMagic = "affect-archive v1";

void put_f64_le(std::string& out, double v) {
  const uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int b = 0; b < 8; ++b)
    out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double get_f64_le(const std::string& in, size_t at) {
  uint64_t bits = 0;
  for (int b = 0; b < 8; ++b)
    bits |= static_cast<uint64_t>(static_cast<unsigned char>(in[at + b]))
            << (8 * b);
  return std::bit_cast<double>(bits);
}

// Pulls one \n-terminated line out of the raw file image.
std::string next_line(const std::string& raw, size_t& at,
                      const std::string& path) {
  const size_t end = raw.find('\n', at);
  if (end == std::string::npos)
    throw UserError(path + ": truncated header");
  std::string line = raw.substr(at, end - at);
  at = end + 1;
  return line;
}

}  // namespace

const std::string& Archive::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw UserError("archive: missing metadata key '" + key + "'");
}

const Tensor& Archive::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw UserError("archive: missing tensor '" + name + "'");
}

void save_archive(const Archive& archive, const std::string& path) {
  std::string out;
  out += kMagic;
  out += ' ';
  out += archive.kind;
  out += '\n';

  out += "meta " + std::to_string(archive.meta.size()) + '\n';
  for (const auto& [key, value] : archive.meta) {
    if (key.empty() || key.find_first_of("\t\n") != std::string::npos ||
        value.find('\n') != std::string::npos)
      throw std::runtime_error("archive: metadata entry not line-safe: '" +
                               key + "'");
    out += key + '\t' + value + '\n';
  }

  if (archive.has_vocab) {
    out += "vocab " + std::to_string(archive.vocab.size()) + '\n';
    for (const auto& [token, count] : archive.vocab.entries())
      out += token + '\t' + std::to_string(count) + '\n';
  }

  out += "tensors " + std::to_string(archive.tensors.size()) + '\n';
  for (const auto& [name, tensor] : archive.tensors) {
    if (name.empty() || name.find_first_of("\t\n ") != std::string::npos)
      throw std::runtime_error("archive: tensor name not line-safe: '" + name +
                               "'");
    out += name;
    out += '\t' + std::to_string(tensor.rank());
    for (int64_t d : tensor.shape) out += '\t' + std::to_string(d);
    out += '\n';
  }
  out += "data\n";
  for (const auto& [name, tensor] : archive.tensors)
    for (double v : tensor.data) put_f64_le(out, v);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw UserError("cannot write file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw UserError("write failed: " + path);
}

Archive load_archive(const std::string& path,
                     const std::string& expected_kind) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UserError("cannot open file: " + path);
  std::string raw((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());

  Archive archive;
  size_t at = 0;
  {
    const std::string line = next_line(raw, at, path);
    const std::string magic(kMagic);
    if (line.size() <= magic.size() + 1 || line.compare(0, magic.size(), magic) != 0 ||
        line[magic.size()] != ' ')
      throw UserError(path + ": not an archive file");
    archive.kind = line.substr(magic.size() + 1);
    if (!expected_kind.empty() && archive.kind != expected_kind)
      throw UserError(path + ": expected a '" + expected_kind +
                      "' archive, found '" + archive.kind + "'");
  }

  auto parse_count = [&](const std::string& line, const std::string& prefix) {
    if (line.compare(0, prefix.size(), prefix) != 0)
      throw UserError(path + ": expected '" + prefix + "<n>', found '" + line +
                      "'");
    return parse_int(line.substr(prefix.size()), path);
  };

  const int64_t n_meta = parse_count(next_line(raw, at, path), "meta ");
  for (int64_t i = 0; i < n_meta; ++i) {
    const std::string line = next_line(raw, at, path);
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw UserError(path + ": malformed metadata line '" + line + "'");
    archive.meta.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }

  std::string section = next_line(raw, at, path);
  if (section.compare(0, 6, "vocab ") == 0) {
    const int64_t n_vocab = parse_count(section, "vocab ");
    std::vector<std::pair<std::string, int64_t>> entries;
    for (int64_t i = 0; i < n_vocab; ++i) {
      const std::string line = next_line(raw, at, path);
      const size_t tab = line.find('\t');
      if (tab == std::string::npos)
        throw UserError(path + ": malformed vocabulary line '" + line + "'");
      entries.emplace_back(line.substr(0, tab),
                           parse_int(line.substr(tab + 1), path));
    }
    archive.has_vocab = true;
    archive.vocab = Vocabulary::from_entries(std::move(entries));
    section = next_line(raw, at, path);
  }

  const int64_t n_tensors = parse_count(section, "tensors ");
  std::set<std::string> names;
  int64_t payload = 0;
  for (int64_t i = 0; i < n_tensors; ++i) {
    const auto fields = split_fields(next_line(raw, at, path), '\t');
    if (fields.size() < 2)
      throw UserError(path + ": malformed tensor manifest line");
    const int64_t rank = parse_int(fields[1], path);
    if (rank < 0 || rank > 2 ||
        static_cast<int64_t>(fields.size()) != 2 + rank)
      throw UserError(path + ": bad manifest entry for tensor '" + fields[0] +
                      "'");
    if (!names.insert(fields[0]).second)
      throw UserError(path + ": duplicate tensor '" + fields[0] + "'");
    Tensor t;
    for (int64_t d = 0; d < rank; ++d) {
      t.shape.push_back(parse_int(fields[2 + d], path));
      if (t.shape.back() < 1)
        throw UserError(path + ": non-positive dimension for tensor '" +
                        fields[0] + "'");
    }
    payload += shape_size(t.shape);
    archive.tensors.emplace_back(fields[0], std::move(t));
  }

  if (next_line(raw, at, path) != "data")
    throw UserError(path + ": missing data section");
  if (static_cast<int64_t>(raw.size() - at) != payload * 8)
    throw UserError(path + ": payload size mismatch (expected " +
                    std::to_string(payload * 8) + " bytes, found " +
                    std::to_string(raw.size() - at) + ")");

  for (auto& [name, tensor] : archive.tensors) {
    const int64_t n = shape_size(tensor.shape);
    tensor.data.resize(n);
    for (int64_t i = 0; i < n; ++i, at += 8) {
      tensor.data[i] = get_f64_le(raw, at);
      if (!std::isfinite(tensor.data[i]))
        throw UserError(path + ": non-finite entry in tensor '" + name + "'");
    }
  }
  return archive;
}

}  // namespace affect
