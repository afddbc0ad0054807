#pragma once

#include <string>
#include <vector>

namespace behc {

// Ordered key/value report emitted by the command-line tools, renderable as
// plain text (one key=value per line) or as a single-line structured object.
// Numeric values print identically in both renderings.
class OutputRecord {
 public:
  explicit OutputRecord(const std::string& command);

  void put(const std::string& key, double value);
  void put_int(const std::string& key, long long value);
  void put(const std::string& key, const std::string& value);
  void put(const std::string& key, const char* value);
  void put(const std::string& key, bool value);

  std::string text() const;
  std::string structured() const;  // single line, object with string/number/bool fields

  static std::string format_double(double value);  // the shared numeric rendering

 private:
  enum class Tag { Real, Integer, Text, Boolean };
  struct Field {
    Tag tag = Tag::Text;
    std::string key;
    double d = 0.0;
    long long i = 0;
    std::string s;
    bool b = false;
  };
  std::vector<Field> fields_;
};

}  // namespace behc
