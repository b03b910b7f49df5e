#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace edr {

/// Locale-independent "%.{precision}g" rendering, identical on every run.
std::string format_double(double v, int precision = 9);

/// Round-trippable rendering (17 significant digits).
std::string format_double_exact(double v);

/// FNV-1a hash of a byte string; used for compact trace digests.
std::uint64_t fnv1a(const std::string& bytes);

/// One "key = value" section of a structured-text file. Keys keep file order.
class KvSection {
 public:
  KvSection() = default;
  explicit KvSection(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key) const;
  long get_long(const std::string& key, long fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::string name_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Structured-text file: optional top-level keys followed by [name] sections.
/// '#' starts a comment; blank lines are ignored.
struct KvFile {
  std::vector<KvSection> sections;  // sections[0] is the unnamed top level

  const KvSection* find(const std::string& name) const;
};

KvFile parse_kv_text(const std::string& text, const std::string& origin = "<text>");
KvFile parse_kv_file(const std::string& path);

/// Plain-text sample files: one finite value per line.
std::vector<double> load_sample_file(const std::string& path);
void save_sample_file(const std::string& path, const std::vector<double>& samples);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Splits on a delimiter and trims surrounding whitespace from each piece.
std::vector<std::string> split_trimmed(const std::string& text, char delim);

}  // namespace edr
