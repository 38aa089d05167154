#include "cadgl/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/os.h>

#include "cadgl/error.hpp"

namespace cadgl {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

// Reads the next non-comment, non-blank line. Returns false at EOF.
bool next_record(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    return true;
  }
  return false;
}

std::size_t intern(std::unordered_map<std::string, std::size_t>& lookup,
                   std::vector<std::string>& names, const std::string& key) {
  auto [it, inserted] = lookup.emplace(key, names.size());
  if (inserted) names.push_back(key);
  return it->second;
}

double parse_double(const std::string& text, const std::filesystem::path& path, std::size_t line,
                    std::size_t column) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(fmt::format("{}:{}: column {}: '{}' is not a number", path.string(), line,
                                 column, text));
  }
  if (!std::isfinite(value)) {
    throw DomainError(fmt::format("{}:{}: column {}: non-finite value '{}'", path.string(), line,
                                  column, text));
  }
  return value;
}

}  // namespace

EdgeTable load_edges(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  EdgeTable table;
  std::unordered_map<std::string, std::size_t> drugs;
  std::unordered_map<std::string, std::size_t> types;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> seen;
  std::size_t duplicates = 0;
  std::size_t first_duplicate_line = 0;

  std::string line;
  std::size_t line_no = 0;
  while (next_record(in, line, line_no)) {
    const auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw ParseError(fmt::format("{}:{}: expected drug1<TAB>drug2<TAB>type_id, got {} field(s)",
                                   path.string(), line_no, fields.size()));
    }
    const std::size_t d1 = intern(drugs, table.drug_ids, fields[0]);
    const std::size_t d2 = intern(drugs, table.drug_ids, fields[1]);
    const std::size_t t = intern(types, table.type_labels, fields[2]);
    if (!seen.emplace(std::tuple{d1, d2, t}, line_no).second) {
      if (duplicates++ == 0) first_duplicate_line = line_no;
      continue;
    }
    table.edges.push_back({d1, d2, t});
  }
  if (duplicates > 0) {
    throw ParseError(fmt::format("{}: {} duplicate triple(s), first at line {}", path.string(),
                                 duplicates, first_duplicate_line));
  }
  return table;
}

Tensor load_features(const std::filesystem::path& path, std::vector<std::string>& drug_ids,
                     const FeatureLoadOptions& options) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  if (!next_record(in, line, line_no)) throw ParseError(path.string() + ": missing header row");
  const auto header = split_tabs(line);
  if (header.size() < 2) {
    throw ParseError(fmt::format("{}:{}: header needs drug_id and at least one feature column",
                                 path.string(), line_no));
  }
  const std::size_t f_dim = header.size() - 1;

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < drug_ids.size(); ++i) index.emplace(drug_ids[i], i);

  std::vector<std::vector<double>> rows(drug_ids.size());
  while (next_record(in, line, line_no)) {
    const auto fields = split_tabs(line);
    if (fields.size() != header.size()) {
      throw ParseError(fmt::format("{}:{}: row has {} columns, header has {}", path.string(),
                                   line_no, fields.size(), header.size()));
    }
    auto it = index.find(fields[0]);
    if (it == index.end()) {
      if (!options.append_unknown) {
        throw ReferenceError(
            fmt::format("{}:{}: unknown drug id '{}'", path.string(), line_no, fields[0]));
      }
      it = index.emplace(fields[0], drug_ids.size()).first;
      drug_ids.push_back(fields[0]);
      rows.emplace_back();
    }
    if (!rows[it->second].empty()) {
      throw ParseError(
          fmt::format("{}:{}: duplicate row for drug '{}'", path.string(), line_no, fields[0]));
    }
    std::vector<double> values(f_dim);
    for (std::size_t c = 0; c < f_dim; ++c) {
      values[c] = parse_double(fields[c + 1], path, line_no, c + 1);
    }
    rows[it->second] = std::move(values);
  }

  std::vector<double> data;
  data.reserve(drug_ids.size() * f_dim);
  for (std::size_t i = 0; i < drug_ids.size(); ++i) {
    if (rows[i].empty()) {
      if (!options.allow_missing) {
        throw ReferenceError(
            fmt::format("{}: no feature row for drug '{}'", path.string(), drug_ids[i]));
      }
      rows[i].assign(f_dim, 0.0);
    }
    data.insert(data.end(), rows[i].begin(), rows[i].end());
  }
  return Tensor::from_external(drug_ids.size(), f_dim, std::move(data));
}

DDIDataset load_dataset(const std::filesystem::path& edges_path,
                        const std::filesystem::path& features_path, bool allow_missing) {
  EdgeTable table = load_edges(edges_path);
  FeatureLoadOptions options;
  options.allow_missing = allow_missing;
  options.append_unknown = true;
  Tensor features = load_features(features_path, table.drug_ids, options);
  return DDIDataset(std::move(table.drug_ids), std::move(table.type_labels), std::move(features),
                    std::move(table.edges));
}

void write_edges(const std::filesystem::path& path, const DDIDataset& dataset) {
  auto out = fmt::output_file(path.string());
  out.print("# drug1\tdrug2\ttype_id\n");
  for (const Edge& e : dataset.edges()) {
    out.print("{}\t{}\t{}\n", dataset.drug_ids()[e.src], dataset.drug_ids()[e.dst],
              dataset.type_labels()[e.type]);
  }
}

void write_features(const std::filesystem::path& path, const DDIDataset& dataset) {
  auto out = fmt::output_file(path.string());
  out.print("drug_id");
  for (std::size_t c = 0; c < dataset.f_dim(); ++c) out.print("\tf{}", c);
  out.print("\n");
  for (std::size_t i = 0; i < dataset.n_drugs(); ++i) {
    out.print("{}", dataset.drug_ids()[i]);
    for (double v : dataset.features().row(i)) out.print("\t{}", v);
    out.print("\n");
  }
}

}  // namespace cadgl
