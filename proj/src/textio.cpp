#include "edr/textio.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace edr {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double_checked(const std::string& value, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": not a number: '" + value + "'");
  }
  if (pos != value.size()) {
    throw std::invalid_argument(what + ": trailing characters in number: '" + value + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

std::string format_double_exact(double v) { return format_double(v, 17); }

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

bool KvSection::has(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return true;
  }
  return false;
}

void KvSection::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(key, std::move(value));
}

std::string KvSection::get_string(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw std::invalid_argument("missing key '" + key + "' in section '" + name_ + "'");
}

std::string KvSection::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double KvSection::get_double(const std::string& key) const {
  return parse_double_checked(get_string(key), "key '" + key + "'");
}

double KvSection::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long KvSection::get_long(const std::string& key) const {
  const double v = get_double(key);
  const long r = static_cast<long>(v);
  if (static_cast<double>(r) != v) {
    throw std::invalid_argument("key '" + key + "': expected an integer");
  }
  return r;
}

long KvSection::get_long(const std::string& key, long fallback) const {
  return has(key) ? get_long(key) : fallback;
}

const KvSection* KvFile::find(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name() == name) return &s;
  }
  return nullptr;
}

KvFile parse_kv_text(const std::string& text, const std::string& origin) {
  KvFile file;
  file.sections.emplace_back("");
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      }
      file.sections.emplace_back(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    file.sections.back().set(key, value);
  }
  return file;
}

KvFile parse_kv_file(const std::string& path) { return parse_kv_text(read_text_file(path), path); }

std::vector<double> load_sample_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open sample file: " + path);
  std::vector<double> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const double v = parse_double_checked(line, path + ":" + std::to_string(lineno));
    if (!std::isfinite(v)) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": non-finite sample");
    }
    samples.push_back(v);
  }
  return samples;
}

void save_sample_file(const std::string& path, const std::vector<double>& samples) {
  std::string out;
  out.reserve(samples.size() * 12);
  for (double s : samples) {
    out += format_double_exact(s);
    out += '\n';
  }
  write_text_file(path, out);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> split_trimmed(const std::string& text, char delim) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, delim)) parts.push_back(trim(cur));
  return parts;
}

}  // namespace edr
