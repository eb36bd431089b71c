#include "pce/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "pce/errors.hpp"

namespace pce {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

bool getline_trimmed(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA"; }

double parse_real(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), last, v);
  if (ec != std::errc() || ptr != last)
    throw ParseError("column '" + column + "': cannot parse '" + s + "' as a number", line);
  return v;
}

std::optional<double> parse_optional_real(const std::string& s, std::size_t line, const std::string& column) {
  if (is_missing(s)) return std::nullopt;
  return parse_real(s, line, column);
}

int parse_binary(const std::string& s, std::size_t line, const std::string& column) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw ParseError("column '" + column + "': expected 0 or 1, got '" + s + "'", line);
}

std::optional<int> parse_optional_binary(const std::string& s, std::size_t line, const std::string& column) {
  if (is_missing(s)) return std::nullopt;
  return parse_binary(s, line, column);
}

struct Header {
  std::vector<std::string> names;
  std::vector<std::size_t> covariate_columns;
  std::vector<std::string> covariate_names;

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw ParseError("header is missing required column '" + name + "'", 1);
  }
};

Header read_header(std::istream& in, const std::set<std::string>& required) {
  std::string line;
  if (!getline_trimmed(in, line)) throw ParseError("empty file: no header row", 1);
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  Header h;
  h.names = split_row(line);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < h.names.size(); ++i) {
    const auto& name = h.names[i];
    if (!seen.insert(name).second) throw ParseError("duplicate header column '" + name + "'", 1);
    if (name.rfind("x_", 0) == 0) {
      h.covariate_columns.push_back(i);
      h.covariate_names.push_back(name.substr(2));
    } else if (!required.contains(name)) {
      throw ParseError("unexpected header column '" + name + "'", 1);
    }
  }
  for (const auto& r : required) h.index_of(r);
  return h;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string format_optional_int(const std::optional<int>& v) { return v ? std::to_string(*v) : "NA"; }

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_real(*v) : "NA"; }

CrossoverData read_crossover_csv(std::istream& in) {
  const Header h = read_header(in, {"subject_id", "sequence", "t_p1", "t_p2", "a_p1", "a_p2", "y_p1", "y_p2"});
  const std::size_t c_id = h.index_of("subject_id"), c_seq = h.index_of("sequence");
  const std::size_t c_t[2] = {h.index_of("t_p1"), h.index_of("t_p2")};
  const std::size_t c_a[2] = {h.index_of("a_p1"), h.index_of("a_p2")};
  const std::size_t c_y[2] = {h.index_of("y_p1"), h.index_of("y_p2")};

  CrossoverData data;
  data.covariate_names = h.covariate_names;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 1;
  while (getline_trimmed(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_row(line);
    if (f.size() != h.names.size())
      throw ParseError("expected " + std::to_string(h.names.size()) + " fields, got " + std::to_string(f.size()),
                       line_no);
    SubjectRecord r;
    r.subject_id = f[c_id];
    if (r.subject_id.empty()) throw ParseError("empty subject_id", line_no);
    if (!ids.insert(r.subject_id).second)
      throw ParseError("duplicate subject_id '" + r.subject_id + "'", line_no);
    if (f[c_seq] == "CF") r.sequence = Sequence::ControlFirst;
    else if (f[c_seq] == "EF") r.sequence = Sequence::ExperimentalFirst;
    else throw ParseError("sequence must be CF or EF, got '" + f[c_seq] + "'", line_no);
    for (std::size_t c : h.covariate_columns) r.covariates.push_back(parse_real(f[c], line_no, h.names[c]));
    for (int q = 0; q < 2; ++q) {
      r.periods[q].treatment = parse_binary(f[c_t[q]], line_no, h.names[c_t[q]]);
      r.periods[q].a = parse_optional_binary(f[c_a[q]], line_no, h.names[c_a[q]]);
      r.periods[q].y = parse_optional_real(f[c_y[q]], line_no, h.names[c_y[q]]);
    }
    try {
      validate_record(r, h.covariate_columns.size());
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
    data.records.push_back(std::move(r));
  }
  return data;
}

CrossoverData load_crossover_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_crossover_csv(in);
}

void write_crossover_csv(std::ostream& out, const CrossoverData& data) {
  out << "subject_id,sequence";
  for (const auto& n : data.covariate_names) out << ",x_" << n;
  out << ",t_p1,t_p2,a_p1,a_p2,y_p1,y_p2\n";
  for (const auto& r : data.records) {
    out << r.subject_id << ',' << (r.sequence == Sequence::ControlFirst ? "CF" : "EF");
    for (double x : r.covariates) out << ',' << format_real(x);
    out << ',' << r.periods[0].treatment << ',' << r.periods[1].treatment;
    out << ',' << format_optional_int(r.periods[0].a) << ',' << format_optional_int(r.periods[1].a);
    out << ',' << format_optional(r.periods[0].y) << ',' << format_optional(r.periods[1].y) << '\n';
  }
}

void save_crossover_csv(const std::filesystem::path& path, const CrossoverData& data) {
  auto out = open_output(path);
  write_crossover_csv(out, data);
}

ParallelData read_parallel_csv(std::istream& in) {
  const Header h = read_header(in, {"subject_id", "treatment", "a", "y"});
  const std::size_t c_id = h.index_of("subject_id"), c_t = h.index_of("treatment");
  const std::size_t c_a = h.index_of("a"), c_y = h.index_of("y");
  ParallelData data;
  data.covariate_names = h.covariate_names;
  std::set<std::pair<std::string, int>> seen;
  std::string line;
  std::size_t line_no = 1;
  while (getline_trimmed(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_row(line);
    if (f.size() != h.names.size())
      throw ParseError("expected " + std::to_string(h.names.size()) + " fields, got " + std::to_string(f.size()),
                       line_no);
    ParallelObservation o;
    o.subject_id = f[c_id];
    if (o.subject_id.empty()) throw ParseError("empty subject_id", line_no);
    o.treatment = parse_binary(f[c_t], line_no, "treatment");
    if (!seen.insert({o.subject_id, o.treatment}).second)
      throw ParseError("duplicate (subject_id, treatment) '" + o.subject_id + "'", line_no);
    for (std::size_t c : h.covariate_columns) o.covariates.push_back(parse_real(f[c], line_no, h.names[c]));
    o.a = parse_optional_binary(f[c_a], line_no, "a");
    o.y = parse_optional_real(f[c_y], line_no, "y");
    data.observations.push_back(std::move(o));
  }
  return data;
}

ParallelData load_parallel_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_parallel_csv(in);
}

void write_parallel_csv(std::ostream& out, const ParallelData& data) {
  out << "subject_id,treatment";
  for (const auto& n : data.covariate_names) out << ",x_" << n;
  out << ",a,y\n";
  for (const auto& o : data.observations) {
    out << o.subject_id << ',' << o.treatment;
    for (double x : o.covariates) out << ',' << format_real(x);
    out << ',' << format_optional_int(o.a) << ',' << format_optional(o.y) << '\n';
  }
}

void save_parallel_csv(const std::filesystem::path& path, const ParallelData& data) {
  auto out = open_output(path);
  write_parallel_csv(out, data);
}

CsvKind detect_csv_kind(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!getline_trimmed(in, line)) throw ParseError("empty file: no header row", 1);
  for (const auto& name : split_row(line)) {
    if (name == "sequence") return CsvKind::Crossover;
    if (name == "treatment") return CsvKind::Parallel;
  }
  throw ParseError("header matches neither the crossover nor the parallel schema", 1);
}

}  // namespace pce
