#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gaat/atomic_file.hpp"
#include "gaat/errors.hpp"
#include "gaat/hmm.hpp"

namespace gaat {

namespace {

constexpr std::string_view kHeader = "gaat-hmm 1";

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    out.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

double parse_real(const std::string& tok, std::size_t line_no) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE) {
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
  }
  return v;
}

class LineCursor {
 public:
  explicit LineCursor(std::string_view text) : lines_(lines_of(text)) {}

  /// Next non-blank, non-comment line split on whitespace.
  std::vector<std::string> next(std::string_view expecting) {
    while (pos_ < lines_.size()) {
      const auto& raw = lines_[pos_++];
      auto toks = split_ws(raw);
      if (toks.empty() || toks[0].front() == '#') continue;
      return toks;
    }
    throw ParseError("unexpected end of model file, expecting " + std::string(expecting));
  }
  [[nodiscard]] std::size_t line() const { return pos_; }
  [[nodiscard]] bool only_blank_left() {
    while (pos_ < lines_.size()) {
      auto toks = split_ws(lines_[pos_]);
      if (!toks.empty() && toks[0].front() != '#') return false;
      ++pos_;
    }
    return true;
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

std::vector<double> read_row(LineCursor& cur, std::string_view label, std::size_t width) {
  auto toks = cur.next(label);
  if (toks.size() != width) {
    throw ParseError("line " + std::to_string(cur.line()) + ": " + std::string(label) + " row needs " +
                     std::to_string(width) + " values");
  }
  std::vector<double> out;
  out.reserve(width);
  for (const auto& t : toks) out.push_back(parse_real(t, cur.line()));
  return out;
}

void expect_keyword(LineCursor& cur, std::string_view kw) {
  auto toks = cur.next(kw);
  if (toks.size() != 1 || toks[0] != kw) {
    throw ParseError("line " + std::to_string(cur.line()) + ": expected '" + std::string(kw) + "'");
  }
}

}  // namespace

std::string serialize_hmm(const HmmModel& model) {
  model.validate();
  std::ostringstream out;
  out << kHeader << '\n';
  out << "states";
  for (const auto& s : model.states) out << ' ' << s;
  out << "\nsymbols";
  for (const auto& s : model.symbols) out << ' ' << s;
  out << "\ninitial";
  for (double v : model.initial) out << ' ' << hexfloat(v);
  out << "\ntransition\n";
  for (std::size_t i = 0; i < model.n(); ++i) {
    for (std::size_t j = 0; j < model.n(); ++j) out << (j ? " " : "") << hexfloat(model.a(i, j));
    out << '\n';
  }
  out << "emission\n";
  for (std::size_t i = 0; i < model.n(); ++i) {
    for (std::size_t k = 0; k < model.m(); ++k) out << (k ? " " : "") << hexfloat(model.b(i, k));
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

HmmModel parse_hmm(std::string_view text) {
  LineCursor cur(text);
  auto header = cur.next("header");
  if (header.size() != 2 || header[0] != "gaat-hmm") throw ParseError("not a gaat-hmm model file");
  if (header[1] != "1") throw ParseError("unsupported gaat-hmm version " + header[1]);

  HmmModel model;
  auto states = cur.next("states");
  if (states.size() < 2 || states[0] != "states") throw ParseError("expected 'states' line");
  model.states.assign(states.begin() + 1, states.end());
  auto symbols = cur.next("symbols");
  if (symbols.size() < 2 || symbols[0] != "symbols") throw ParseError("expected 'symbols' line");
  model.symbols.assign(symbols.begin() + 1, symbols.end());

  auto initial = cur.next("initial");
  if (initial.empty() || initial[0] != "initial" || initial.size() != model.n() + 1) {
    throw ParseError("line " + std::to_string(cur.line()) + ": bad 'initial' line");
  }
  for (std::size_t i = 1; i < initial.size(); ++i) model.initial.push_back(parse_real(initial[i], cur.line()));

  expect_keyword(cur, "transition");
  for (std::size_t i = 0; i < model.n(); ++i) {
    auto row = read_row(cur, "transition", model.n());
    model.transition.insert(model.transition.end(), row.begin(), row.end());
  }
  expect_keyword(cur, "emission");
  for (std::size_t i = 0; i < model.n(); ++i) {
    auto row = read_row(cur, "emission", model.m());
    model.emission.insert(model.emission.end(), row.begin(), row.end());
  }
  expect_keyword(cur, "end");
  if (!cur.only_blank_left()) throw ParseError("trailing content after 'end'");

  try {
    model.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }
  return model;
}

void save_hmm(const std::filesystem::path& path, const HmmModel& model) {
  write_file_atomic(path, serialize_hmm(model));
}

HmmModel load_hmm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_hmm(buf.str());
}

std::vector<std::vector<std::string>> parse_corpus(std::string_view text) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : lines_of(text)) {
    auto toks = split_ws(line);
    if (toks.empty() || toks[0].front() == '#') continue;
    out.push_back(std::move(toks));
  }
  return out;
}

std::string serialize_corpus(const std::vector<std::vector<std::string>>& corpus) {
  std::string out;
  for (const auto& seq : corpus) {
    if (seq.empty()) throw SerializationError("corpus sequences must be non-empty");
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq[i].empty() || seq[i].find_first_of(" \t\r\n#") != std::string::npos) {
        throw SerializationError("symbol '" + seq[i] + "' cannot be written to a corpus file");
      }
      if (i) out += ' ';
      out += seq[i];
    }
    out += '\n';
  }
  return out;
}

}  // namespace gaat
