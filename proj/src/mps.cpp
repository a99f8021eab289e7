#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "lfscuc/solver.hpp"

namespace lfscuc {

namespace {

constexpr const char* kObjRow = "OBJ";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

char row_type(const ModelRow& r) {
  if (r.lo == r.hi) return 'E';
  if (r.lo == -kInf) return 'L';
  if (r.hi == kInf) return 'G';
  return 'L';  // finite range: L with a RANGES entry
}

double row_rhs(const ModelRow& r) {
  return row_type(r) == 'G' ? r.lo : r.hi;
}

}  // namespace

std::string export_mps(const LinearModel& m) {
  for (const auto& c : m.cols())
    if (c.name == kObjRow)
      throw ValidationError("variable name OBJ collides with the objective "
                            "row in MPS output");
  for (const auto& r : m.rows())
    if (r.name == kObjRow)
      throw ValidationError("row name OBJ collides with the objective row in "
                            "MPS output");

  std::ostringstream out;
  out << "NAME " << m.name() << "\n";
  out << "ROWS\n N " << kObjRow << "\n";
  for (const auto& r : m.rows()) out << ' ' << row_type(r) << ' ' << r.name << "\n";

  // Column-major view of the row coefficients.
  std::vector<std::vector<std::pair<int, double>>> by_col(m.n_cols());
  for (int r = 0; r < m.n_rows(); ++r)
    for (const auto& t : m.row(r).terms) by_col[t.col].push_back({r, t.coeff});

  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int c = 0; c < m.n_cols(); ++c) {
    const auto& col = m.col(c);
    if (col.integer != in_int) {
      out << "    M" << marker++ << " 'MARKER' "
          << (col.integer ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = col.integer;
    }
    // The objective entry is always written, even when zero, so that every
    // variable appears in COLUMNS and survives a round trip in order.
    out << "    " << col.name << ' ' << kObjRow << ' ' << num(col.obj);
    for (const auto& [r, v] : by_col[c])
      out << ' ' << m.row(r).name << ' ' << num(v);
    out << "\n";
  }
  if (in_int) out << "    M" << marker++ << " 'MARKER' 'INTEND'\n";

  out << "RHS\n";
  for (const auto& r : m.rows())
    out << "    RHS " << r.name << ' ' << num(row_rhs(r)) << "\n";

  bool any_range = false;
  for (const auto& r : m.rows())
    if (r.lo != r.hi && r.lo != -kInf && r.hi != kInf) any_range = true;
  if (any_range) {
    out << "RANGES\n";
    for (const auto& r : m.rows())
      if (r.lo != r.hi && r.lo != -kInf && r.hi != kInf)
        out << "    RNG " << r.name << ' ' << num(r.hi - r.lo) << "\n";
  }

  out << "BOUNDS\n";
  for (const auto& c : m.cols()) {
    if (c.integer && c.lo == 0.0 && c.hi == 1.0) {
      out << " BV BND " << c.name << "\n";
      continue;
    }
    if (c.lo == -kInf)
      out << " MI BND " << c.name << "\n";
    else
      out << (c.integer ? " LI BND " : " LO BND ") << c.name << ' '
          << num(c.lo) << "\n";
    if (c.hi == kInf)
      out << " PL BND " << c.name << "\n";
    else
      out << (c.integer ? " UI BND " : " UP BND ") << c.name << ' '
          << num(c.hi) << "\n";
  }
  out << "ENDATA\n";
  return out.str();
}

namespace {

struct RowDraft {
  char type = 'E';
  double rhs = 0.0;
  bool has_range = false;
  double range = 0.0;
};

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tok;
  std::string t;
  while (in >> t) tok.push_back(t);
  return tok;
}

double parse_num(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("MPS: malformed number '" + s + "'");
  }
}

}  // namespace

LinearModel import_mps(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::string model_name = "model";

  std::string obj_row;
  std::vector<std::string> row_order;
  std::unordered_map<std::string, RowDraft> row_drafts;

  struct ColDraft {
    bool integer = false;
    double obj = 0.0;
    bool lo_set = false, hi_set = false;
    double lo = 0.0, hi = kInf;
    std::vector<std::pair<std::string, double>> entries;
  };
  std::vector<std::string> col_order;
  std::unordered_map<std::string, ColDraft> col_drafts;
  bool in_int = false;
  bool ended = false;

  auto col_of = [&](const std::string& name) -> ColDraft& {
    auto it = col_drafts.find(name);
    if (it == col_drafts.end()) {
      col_order.push_back(name);
      it = col_drafts.emplace(name, ColDraft{}).first;
      it->second.integer = in_int;
    }
    return it->second;
  };
  auto draft_of = [&](const std::string& name) -> RowDraft& {
    auto it = row_drafts.find(name);
    if (it == row_drafts.end())
      throw ValidationError("MPS: reference to undeclared row '" + name + "'");
    return it->second;
  };

  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '*') continue;  // comment
    auto tok = tokenize(line);
    if (tok.empty()) continue;

    bool indented = std::isspace(static_cast<unsigned char>(line[0])) != 0;
    if (!indented) {
      section = tok[0];
      if (section == "NAME") {
        if (tok.size() > 1) model_name = tok[1];
      } else if (section == "ENDATA") {
        ended = true;
        break;
      } else if (section != "ROWS" && section != "COLUMNS" &&
                 section != "RHS" && section != "RANGES" &&
                 section != "BOUNDS" && section != "OBJSENSE") {
        throw ValidationError("MPS: unsupported section '" + section + "'");
      }
      continue;
    }

    if (section == "ROWS") {
      if (tok.size() != 2)
        throw ValidationError("MPS: malformed ROWS line '" + line + "'");
      char t = tok[0].size() == 1 ? tok[0][0] : '?';
      if (t == 'N') {
        if (!obj_row.empty())
          throw ValidationError("MPS: multiple N rows are not supported");
        obj_row = tok[1];
      } else if (t == 'E' || t == 'L' || t == 'G') {
        if (row_drafts.count(tok[1]))
          throw ValidationError("MPS: duplicate row '" + tok[1] + "'");
        row_order.push_back(tok[1]);
        row_drafts[tok[1]].type = t;
      } else {
        throw ValidationError("MPS: unknown row type in '" + line + "'");
      }
    } else if (section == "COLUMNS") {
      if (tok.size() >= 3 && tok[1] == "'MARKER'") {
        if (tok[2] == "'INTORG'") in_int = true;
        else if (tok[2] == "'INTEND'") in_int = false;
        else throw ValidationError("MPS: unknown marker in '" + line + "'");
        continue;
      }
      if (tok.size() < 3 || tok.size() % 2 == 0)
        throw ValidationError("MPS: malformed COLUMNS line '" + line + "'");
      auto& col = col_of(tok[0]);
      for (std::size_t i = 1; i + 1 < tok.size(); i += 2) {
        double v = parse_num(tok[i + 1]);
        if (tok[i] == obj_row) col.obj += v;
        else {
          draft_of(tok[i]);  // existence check
          col.entries.push_back({tok[i], v});
        }
      }
    } else if (section == "RHS") {
      if (tok.size() < 3 || tok.size() % 2 == 0)
        throw ValidationError("MPS: malformed RHS line '" + line + "'");
      for (std::size_t i = 1; i + 1 < tok.size(); i += 2)
        draft_of(tok[i]).rhs = parse_num(tok[i + 1]);
    } else if (section == "RANGES") {
      if (tok.size() < 3 || tok.size() % 2 == 0)
        throw ValidationError("MPS: malformed RANGES line '" + line + "'");
      for (std::size_t i = 1; i + 1 < tok.size(); i += 2) {
        auto& d = draft_of(tok[i]);
        d.has_range = true;
        d.range = parse_num(tok[i + 1]);
      }
    } else if (section == "BOUNDS") {
      if (tok.size() < 3)
        throw ValidationError("MPS: malformed BOUNDS line '" + line + "'");
      const std::string& type = tok[0];
      auto& col = col_of(tok[2]);
      auto val = [&]() {
        if (tok.size() < 4)
          throw ValidationError("MPS: bound '" + line + "' needs a value");
        return parse_num(tok[3]);
      };
      if (type == "LO") { col.lo = val(); col.lo_set = true; }
      else if (type == "UP") { col.hi = val(); col.hi_set = true; }
      else if (type == "LI") { col.lo = val(); col.lo_set = true; col.integer = true; }
      else if (type == "UI") { col.hi = val(); col.hi_set = true; col.integer = true; }
      else if (type == "FX") { col.lo = col.hi = val(); col.lo_set = col.hi_set = true; }
      else if (type == "MI") { col.lo = -kInf; col.lo_set = true; }
      else if (type == "PL") { col.hi = kInf; col.hi_set = true; }
      else if (type == "FR") { col.lo = -kInf; col.hi = kInf; col.lo_set = col.hi_set = true; }
      else if (type == "BV") { col.lo = 0.0; col.hi = 1.0; col.integer = true; col.lo_set = col.hi_set = true; }
      else throw ValidationError("MPS: unsupported bound type '" + type + "'");
    } else if (section == "OBJSENSE") {
      if (tok[0] != "MIN" && tok[0] != "MINIMIZE")
        throw ValidationError("MPS: only minimization is supported");
    } else {
      throw ValidationError("MPS: data line before any section: '" + line + "'");
    }
  }
  if (!ended) throw ValidationError("MPS: missing ENDATA");
  if (obj_row.empty()) throw ValidationError("MPS: no objective (N) row");

  LinearModel m(model_name);
  for (const auto& name : col_order) {
    const auto& d = col_drafts.at(name);
    m.add_variable(name, d.lo, d.hi, d.obj, d.integer);
  }
  std::unordered_map<std::string, std::vector<RowTerm>> terms_by_row;
  for (const auto& cname : col_order) {
    int ci = m.col_index(cname);
    for (const auto& [rname, v] : col_drafts.at(cname).entries)
      terms_by_row[rname].push_back({ci, v});
  }
  for (const auto& name : row_order) {
    const auto& d = row_drafts.at(name);
    double lo, hi;
    switch (d.type) {
      case 'E': lo = hi = d.rhs; break;
      case 'L': lo = -kInf; hi = d.rhs; break;
      default:  lo = d.rhs; hi = kInf; break;  // 'G'
    }
    if (d.has_range) {
      double r = std::abs(d.range);
      if (d.type == 'L') lo = hi - r;
      else if (d.type == 'G') hi = lo + r;
      else {  // E: the sign of the range picks the side
        if (d.range >= 0) hi = lo + r;
        else lo = hi - r;
      }
    }
    auto it = terms_by_row.find(name);
    std::vector<RowTerm> terms =
        it == terms_by_row.end() ? std::vector<RowTerm>{} : std::move(it->second);
    m.add_row(name, std::move(terms), lo, hi);
  }
  return m;
}

}  // namespace lfscuc
