#include "causal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "causal/util.hpp"

namespace causal {

namespace {

const char* kind_name(ColumnKind k) {
    switch (k) {
        case ColumnKind::Continuous: return "continuous";
        case ColumnKind::Binary: return "binary";
        case ColumnKind::Categorical: return "categorical";
        case ColumnKind::Ordinal: return "ordinal";
    }
    return "?";
}

bool is_integer(double v) { return std::floor(v) == v && std::isfinite(v); }

// RFC 4180 field splitting; quoted fields may contain commas, escaped
// quotes and line breaks
std::vector<std::vector<std::string>> parse_csv_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t i = 0;
    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&]() {
        if (row.empty() && field.empty() && !field_started) return; // blank line
        end_field();
        records.push_back(row);
        row.clear();
    };
    while (i < text.size()) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                } else {
                    quoted = false;
                    ++i;
                }
            } else {
                field += c;
                ++i;
            }
        } else if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
            ++i;
        } else if (c == ',') {
            end_field();
            ++i;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            ++i;
            end_row();
        } else {
            field += c;
            field_started = true;
            ++i;
        }
    }
    if (quoted) throw std::runtime_error("csv: unterminated quoted field");
    if (field_started || !row.empty()) end_row();
    return records;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

ColumnType infer_type(const std::vector<double>& observed_values) {
    std::set<double> distinct(observed_values.begin(), observed_values.end());
    bool zero_one = !distinct.empty();
    for (double v : distinct)
        if (v != 0.0 && v != 1.0) zero_one = false;
    if (zero_one && distinct.size() <= 2) return {ColumnKind::Binary, 2};
    if (!distinct.empty() && distinct.size() <= 10) {
        bool ints = true;
        double maxv = 0.0;
        for (double v : distinct) {
            if (!is_integer(v) || v < 0.0) ints = false;
            maxv = std::max(maxv, v);
        }
        if (ints) return {ColumnKind::Ordinal, static_cast<int>(maxv) + 1};
    }
    return {ColumnKind::Continuous, 0};
}

} // namespace

int Dataset::column_index(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return static_cast<int>(j);
    throw std::invalid_argument("unknown column '" + name + "'");
}

bool Dataset::has_column(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

Eigen::VectorXd Dataset::column(const std::string& name) const {
    return values.col(column_index(name));
}

const ColumnType& Dataset::type_of(const std::string& name) const {
    return types[column_index(name)];
}

Eigen::Index Dataset::missing_count(const std::string& name) const {
    int j = column_index(name);
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < n_rows(); ++i)
        if (!observed(i, j)) ++n;
    return n;
}

bool Dataset::any_missing() const {
    for (Eigen::Index j = 0; j < n_cols(); ++j)
        for (Eigen::Index i = 0; i < n_rows(); ++i)
            if (!observed(i, j)) return true;
    return false;
}

int Dataset::level_count(const std::string& name) const {
    const ColumnType& t = type_of(name);
    if (!t.discrete()) throw std::invalid_argument("column '" + name + "' is continuous, levels undefined");
    return t.levels;
}

void Dataset::validate() const {
    if (names.size() != types.size() || static_cast<Eigen::Index>(names.size()) != values.cols())
        throw std::invalid_argument("dataset: column metadata out of sync");
    if (values.rows() != observed.rows() || values.cols() != observed.cols())
        throw std::invalid_argument("dataset: mask shape mismatch");
    std::set<std::string> seen;
    for (const auto& n : names)
        if (!seen.insert(n).second) throw std::invalid_argument("dataset: duplicate column '" + n + "'");
    for (Eigen::Index j = 0; j < n_cols(); ++j) {
        const ColumnType& t = types[j];
        if (t.discrete() && t.levels < 2)
            throw std::invalid_argument("dataset: column '" + names[j] + "' needs at least 2 levels");
        for (Eigen::Index i = 0; i < n_rows(); ++i) {
            if (!observed(i, j)) continue;
            double v = values(i, j);
            if (!std::isfinite(v))
                throw std::invalid_argument("dataset: non-finite value in column '" + names[j] + "' row " +
                                            std::to_string(i));
            if (t.discrete()) {
                if (!is_integer(v) || v < 0.0 || v >= t.levels)
                    throw std::invalid_argument("dataset: column '" + names[j] + "' (" + kind_name(t.kind) +
                                                ", k=" + std::to_string(t.levels) + ") has invalid value " +
                                                format_double(v) + " at row " + std::to_string(i));
            }
        }
    }
}

Schema parse_schema(const std::string& text) {
    Schema schema;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = strip_comment(raw);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("schema line " + std::to_string(lineno) + ": expected 'name = type'");
        std::string name = trim(line.substr(0, eq));
        std::string type = trim(line.substr(eq + 1));
        if (name.empty()) throw std::runtime_error("schema line " + std::to_string(lineno) + ": empty column name");
        SchemaEntry entry;
        int k = 0;
        std::string base = type;
        auto paren = type.find('(');
        if (paren != std::string::npos) {
            if (type.back() != ')') throw std::runtime_error("schema line " + std::to_string(lineno) + ": bad type");
            base = trim(type.substr(0, paren));
            k = static_cast<int>(parse_long(type.substr(paren + 1, type.size() - paren - 2), "schema levels"));
            if (k < 2) throw std::runtime_error("schema line " + std::to_string(lineno) + ": levels must be >= 2");
        }
        if (base == "auto") {
            entry.is_auto = true;
        } else if (base == "continuous") {
            entry = {false, {ColumnKind::Continuous, 0}};
        } else if (base == "binary") {
            entry = {false, {ColumnKind::Binary, 2}};
        } else if (base == "categorical") {
            entry = {false, {ColumnKind::Categorical, k}}; // k = 0 means infer from data
        } else if (base == "ordinal") {
            entry = {false, {ColumnKind::Ordinal, k}};
        } else {
            throw std::runtime_error("schema line " + std::to_string(lineno) + ": unknown type '" + type + "'");
        }
        schema[name] = entry;
    }
    return schema;
}

Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_schema(ss.str());
}

Dataset parse_csv(const std::string& text, const Schema& schema) {
    auto records = parse_csv_records(text);
    if (records.empty()) throw std::runtime_error("csv: empty input");
    const auto& header = records[0];
    const std::size_t ncol = header.size();
    if (ncol == 0) throw std::runtime_error("csv: empty header");

    Dataset ds;
    ds.names.assign(header.begin(), header.end());
    const std::size_t nrow = records.size() - 1;
    ds.values = Eigen::MatrixXd::Constant(nrow, ncol, std::numeric_limits<double>::quiet_NaN());
    ds.observed = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(nrow, ncol);

    for (std::size_t i = 0; i < nrow; ++i) {
        const auto& row = records[i + 1];
        if (row.size() != ncol)
            throw std::runtime_error("csv row " + std::to_string(i + 2) + ": expected " + std::to_string(ncol) +
                                     " fields, got " + std::to_string(row.size()));
        for (std::size_t j = 0; j < ncol; ++j) {
            std::string cell = trim(row[j]);
            if (cell.empty() || cell == "NA") continue;
            ds.values(i, j) = parse_double(cell, "csv row " + std::to_string(i + 2) + " column '" + header[j] + "'");
            ds.observed(i, j) = 1;
        }
    }

    for (const auto& [name, entry] : schema)
        if (std::find(ds.names.begin(), ds.names.end(), name) == ds.names.end())
            throw std::runtime_error("schema names unknown column '" + name + "'");

    ds.types.resize(ncol);
    for (std::size_t j = 0; j < ncol; ++j) {
        std::vector<double> obs;
        for (std::size_t i = 0; i < nrow; ++i)
            if (ds.observed(i, j)) obs.push_back(ds.values(i, j));
        auto it = schema.find(ds.names[j]);
        if (it == schema.end() || it->second.is_auto) {
            ds.types[j] = infer_type(obs);
        } else {
            ds.types[j] = it->second.type;
            if (ds.types[j].discrete() && ds.types[j].levels == 0) {
                double maxv = 1.0;
                for (double v : obs)
                    if (is_integer(v)) maxv = std::max(maxv, v);
                ds.types[j].levels = static_cast<int>(maxv) + 1;
            }
        }
    }
    ds.validate();
    return ds;
}

Dataset load_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), schema);
}

std::string write_csv(const Dataset& ds) {
    std::string out;
    for (std::size_t j = 0; j < ds.names.size(); ++j) {
        if (j) out += ",";
        out += csv_escape(ds.names[j]);
    }
    out += "\n";
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.n_cols(); ++j) {
            if (j) out += ",";
            if (ds.observed(i, j)) out += format_double(ds.values(i, j));
        }
        out += "\n";
    }
    return out;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write data file '" + path + "'");
    out << write_csv(ds);
}

Dataset rescale_column(const Dataset& ds, const std::string& name) {
    int j = ds.column_index(name);
    if (ds.types[j].kind != ColumnKind::Continuous)
        throw std::invalid_argument("rescale_column: column '" + name + "' is not continuous");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i)
        if (ds.observed(i, j)) {
            lo = std::min(lo, ds.values(i, j));
            hi = std::max(hi, ds.values(i, j));
        }
    if (!(hi > lo)) throw std::invalid_argument("rescale_column: column '" + name + "' is constant or empty");
    Dataset out = ds;
    for (Eigen::Index i = 0; i < out.n_rows(); ++i)
        if (out.observed(i, j)) out.values(i, j) = (out.values(i, j) - lo) / (hi - lo);
    out.rescaled[name] = {lo, hi};
    return out;
}

double unscale_effect(const RescaleBounds& b, double scaled_delta) {
    return scaled_delta * (b.hi - b.lo);
}

Dataset make_censoring(const Dataset& ds, const std::string& name) {
    int j = ds.column_index(name);
    std::string qname = "Q_" + name;
    if (ds.has_column(qname)) throw std::invalid_argument("make_censoring: column '" + qname + "' already exists");
    Eigen::Index miss = ds.missing_count(name);
    if (miss == 0) throw std::invalid_argument("make_censoring: column '" + name + "' has no missing values");

    std::vector<double> obs;
    for (Eigen::Index i = 0; i < ds.n_rows(); ++i)
        if (ds.observed(i, j)) obs.push_back(ds.values(i, j));
    if (obs.empty()) throw std::invalid_argument("make_censoring: column '" + name + "' is entirely missing");

    const ColumnType& t = ds.types[j];
    double fill;
    if (t.kind == ColumnKind::Continuous || t.kind == ColumnKind::Ordinal) {
        double m = 0.0;
        for (double v : obs) m += v;
        m /= static_cast<double>(obs.size());
        if (t.kind == ColumnKind::Ordinal) {
            // ordinal cells must stay on the level grid
            m = std::round(m);
            m = std::min(std::max(m, 0.0), static_cast<double>(t.levels - 1));
        }
        fill = m;
    } else {
        std::vector<Eigen::Index> counts(t.levels, 0);
        for (double v : obs) counts[static_cast<int>(v)]++;
        int mode = 0;
        for (int l = 1; l < t.levels; ++l)
            if (counts[l] > counts[mode]) mode = l; // smallest level wins ties
        fill = mode;
    }

    Dataset out = ds;
    out.values.conservativeResize(Eigen::NoChange, ds.n_cols() + 1);
    out.observed.conservativeResize(Eigen::NoChange, ds.n_cols() + 1);
    Eigen::Index q = ds.n_cols();
    for (Eigen::Index i = 0; i < out.n_rows(); ++i) {
        bool seen = ds.observed(i, j) != 0;
        out.values(i, q) = seen ? 1.0 : 0.0;
        out.observed(i, q) = 1;
        if (!seen) {
            out.values(i, j) = fill;
            out.observed(i, j) = 1;
        }
    }
    out.names.push_back(qname);
    out.types.push_back({ColumnKind::Binary, 2});
    out.validate();
    return out;
}

Dataset take_rows(const Dataset& ds, const std::vector<Eigen::Index>& rows) {
    Dataset out = ds;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), ds.n_cols());
    out.observed.resize(static_cast<Eigen::Index>(rows.size()), ds.n_cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= ds.n_rows()) throw std::invalid_argument("take_rows: index out of range");
        out.values.row(static_cast<Eigen::Index>(i)) = ds.values.row(rows[i]);
        out.observed.row(static_cast<Eigen::Index>(i)) = ds.observed.row(rows[i]);
    }
    return out;
}

} // namespace causal
