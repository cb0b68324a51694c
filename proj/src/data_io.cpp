#include "bmameta/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "bmameta/errors.hpp"

namespace bmameta {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && s == trim(s)) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

double parse_real(const std::string& s, const char* field) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(std::string(field) + ": '" + s + "' is not a number");
  return v;
}

std::int64_t parse_count(const std::string& s, const char* field) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(std::string(field) + ": '" + s + "' is not an integer count");
  return v;
}

enum class Schema { Tables, Estimates };

struct Columns {
  Schema schema;
  std::optional<std::size_t> comparison, study;
  std::size_t a = 0, b = 0, c = 0, d = 0, y = 0, se = 0;
};

Columns resolve_columns(const std::vector<std::string>& header, bool corpus) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (pos.count(header[i])) throw ParseError("duplicate column '" + header[i] + "'");
    pos[header[i]] = i;
  }
  const bool tables = pos.count("a") || pos.count("b") || pos.count("c") || pos.count("d");
  const bool estimates = pos.count("y") || pos.count("se");
  if (tables && estimates)
    throw MixedSchemaError("file mixes table columns (a,b,c,d) with estimate columns (y,se)");
  Columns c;
  auto need = [&](const char* name) {
    auto it = pos.find(name);
    if (it == pos.end())
      throw ParseError(std::string("missing column '") + name +
                       "'; expected study,a,b,c,d or study,y,se");
    return it->second;
  };
  if (tables) {
    c.schema = Schema::Tables;
    c.a = need("a");
    c.b = need("b");
    c.c = need("c");
    c.d = need("d");
  } else if (estimates) {
    c.schema = Schema::Estimates;
    c.y = need("y");
    c.se = need("se");
  } else {
    throw ParseError("unrecognized header; expected study,a,b,c,d or study,y,se");
  }
  if (pos.count("study")) c.study = pos["study"];
  if (corpus) c.comparison = need("comparison");
  return c;
}

[[noreturn]] void rethrow_as(const std::exception_ptr& first, const std::string& msg) {
  try {
    std::rethrow_exception(first);
  } catch (const InvalidEstimateError&) {
    throw InvalidEstimateError(msg);
  } catch (const InvalidTableError&) {
    throw InvalidTableError(msg);
  } catch (const DegenerateVarianceError&) {
    throw DegenerateVarianceError(msg);
  } catch (...) {
    throw ParseError(msg);
  }
}

struct Parsed {
  std::vector<std::string> groups;  // comparison per row (corpus only)
  std::vector<ContingencyTable> tables;
  std::vector<EffectEstimate> estimates;
  std::vector<std::string> labels;
  Schema schema;
};

Parsed parse_rows(std::string_view text, Measure measure, bool corpus) {
  const auto csv = parse_csv(text);
  if (csv.rows.empty()) throw ParseError("no data rows");
  const auto cols = resolve_columns(csv.header, corpus);
  Parsed p;
  p.schema = cols.schema;
  std::vector<RowDiagnostic> diags;
  std::exception_ptr first;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::size_t line = csv.line_numbers[r];
    const char* field = "";
    try {
      if (row.size() != csv.header.size()) {
        field = "row";
        throw ParseError("expected " + std::to_string(csv.header.size()) + " fields, got " +
                         std::to_string(row.size()));
      }
      std::string label = cols.study ? row[*cols.study] : "";
      if (cols.schema == Schema::Tables) {
        ContingencyTable t;
        field = "a";
        t.a = parse_count(row[cols.a], "a");
        field = "b";
        t.b = parse_count(row[cols.b], "b");
        field = "c";
        t.c = parse_count(row[cols.c], "c");
        field = "d";
        t.d = parse_count(row[cols.d], "d");
        field = "table";
        t.validate();
        p.tables.push_back(t);
      } else {
        field = "y";
        const double y = parse_real(row[cols.y], "y");
        field = "se";
        const double se = parse_real(row[cols.se], "se");
        field = "estimate";
        p.estimates.push_back(validate_estimate(y, se, measure, label));
      }
      p.labels.push_back(label);
      if (corpus) p.groups.push_back(row[*cols.comparison]);
    } catch (const Error& e) {
      if (!first) first = std::current_exception();
      diags.push_back({line, field, e.what()});
    }
  }
  if (!diags.empty()) {
    std::ostringstream msg;
    msg << diags.size() << " invalid row(s):";
    for (const auto& d : diags) msg << "\n  line " << d.row << ", " << d.field << ": " << d.message;
    rethrow_as(first, msg.str());
  }
  return p;
}

Dataset build(Measure measure, Schema schema, std::vector<ContingencyTable> tables,
              std::vector<EffectEstimate> estimates, std::vector<std::string> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i].empty()) labels[i] = "Study " + std::to_string(i + 1);
  if (schema == Schema::Tables) return Dataset::from_tables(measure, std::move(tables), std::move(labels));
  for (std::size_t i = 0; i < estimates.size(); ++i) estimates[i].study_label = labels[i];
  return Dataset::from_estimates(measure, std::move(estimates));
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  CsvTable out;
  std::vector<std::string> row;
  std::string cell;
  bool in_quotes = false, quoted = false, any = false;
  std::size_t line = 1, row_line = 1;

  auto end_cell = [&] {
    row.push_back(quoted ? cell : trim(cell));
    cell.clear();
    quoted = false;
  };
  auto end_row = [&] {
    end_cell();
    const bool blank = row.size() == 1 && row[0].empty() && !any;
    if (!blank) {
      if (out.header.empty()) {
        for (auto& h : row) out.header.push_back(lower(trim(h)));
      } else {
        out.rows.push_back(row);
        out.line_numbers.push_back(row_line);
      }
    }
    row.clear();
    any = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        cell += ch;
      }
      continue;
    }
    if (ch == '"') {
      if (!trim(cell).empty())
        throw ParseError("line " + std::to_string(line) + ": stray quote inside a field");
      cell.clear();
      in_quotes = quoted = any = true;
    } else if (ch == ',') {
      end_cell();
      any = true;
    } else if (ch == '\r') {
      // handled with the following \n
    } else if (ch == '\n') {
      end_row();
      ++line;
      row_line = line;
    } else {
      if (quoted && !std::isspace(static_cast<unsigned char>(ch)))
        throw ParseError("line " + std::to_string(line) + ": text after a closing quote");
      if (!quoted) cell += ch;
      if (!std::isspace(static_cast<unsigned char>(ch))) any = true;
    }
  }
  if (in_quotes) throw ParseError("line " + std::to_string(line) + ": unterminated quote");
  if (!cell.empty() || !row.empty() || any) end_row();
  if (out.header.empty()) throw ParseError("empty file: a header row is required");
  return out;
}

Dataset dataset_from_csv(std::string_view text, Measure measure) {
  auto p = parse_rows(text, measure, false);
  return build(measure, p.schema, std::move(p.tables), std::move(p.estimates), std::move(p.labels));
}

std::vector<Dataset> corpus_from_csv(std::string_view text, Measure measure) {
  auto p = parse_rows(text, measure, true);
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < p.groups.size(); ++i) {
    if (!members.count(p.groups[i])) order.push_back(p.groups[i]);
    members[p.groups[i]].push_back(i);
  }
  std::vector<Dataset> out;
  for (const auto& g : order) {
    std::vector<ContingencyTable> tables;
    std::vector<EffectEstimate> estimates;
    std::vector<std::string> labels;
    for (auto i : members[g]) {
      if (p.schema == Schema::Tables)
        tables.push_back(p.tables[i]);
      else
        estimates.push_back(p.estimates[i]);
      labels.push_back(p.labels[i]);
    }
    out.push_back(build(measure, p.schema, std::move(tables), std::move(estimates), std::move(labels)));
  }
  return out;
}

std::vector<double> values_from_csv(std::string_view text) {
  const auto csv = parse_csv(text);
  std::size_t col = 0;
  if (csv.header.size() > 1) {
    const auto it = std::find(csv.header.begin(), csv.header.end(), "value");
    if (it == csv.header.end()) throw ParseError("expected a 'value' column");
    col = static_cast<std::size_t>(it - csv.header.begin());
  }
  std::vector<double> out;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    try {
      if (csv.rows[r].size() != csv.header.size()) throw ParseError("wrong number of fields");
      out.push_back(parse_real(csv.rows[r][col], "value"));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(csv.line_numbers[r]) + ": " + e.what());
    }
  }
  if (out.empty()) throw ParseError("no data rows");
  return out;
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  if (data.has_tables()) {
    out << "study,a,b,c,d\n";
    for (std::size_t i = 0; i < data.tables.size(); ++i) {
      const auto& t = data.tables[i];
      out << quote(data.labels[i]) << ',' << t.a << ',' << t.b << ',' << t.c << ',' << t.d << '\n';
    }
  } else {
    out << "study,y,se\n";
    for (const auto& e : data.estimates)
      out << quote(e.study_label) << ',' << fmt(e.y) << ',' << fmt(e.se) << '\n';
  }
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset ingest(const std::string& path, Measure measure) {
  const auto text = read_file(path);
  try {
    return dataset_from_csv(text, measure);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::vector<Dataset> ingest_corpus(const std::string& path, Measure measure) {
  const auto text = read_file(path);
  try {
    return corpus_from_csv(text, measure);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace bmameta
