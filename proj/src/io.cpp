#include "dirtensor/io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dirtensor {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
    }
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json measure_json(const MixingMeasure& G) {
    return {{"weights", G.weights()}, {"topics", G.atoms().rows()}};
}

}  // namespace

std::string tensor_to_json(const Tensor& t) {
    json j;
    j["shape"] = t.shape();
    j["data"] = std::vector<double>(t.data().begin(), t.data().end());
    return j.dump();
}

Tensor tensor_from_json(const std::string& text) {
    const auto j = parse(text);
    try {
        return Tensor(j.at("shape").get<Shape>(), j.at("data").get<std::vector<double>>());
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad tensor JSON: ") + e.what());
    }
}

std::string corpus_to_json(const Corpus& c) {
    return json{{"V", c.V}, {"N", c.N}, {"docs", c.docs}}.dump();
}

Corpus corpus_from_json(const std::string& text) {
    const auto j = parse(text);
    Corpus c;
    try {
        c.V = j.at("V").get<std::size_t>();
        c.N = j.at("N").get<std::size_t>();
        c.docs = j.at("docs").get<std::vector<Document>>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad corpus JSON: ") + e.what());
    }
    c.validate();
    return c;
}

std::string measure_to_json(const MixingMeasure& G, double abar) {
    auto j = measure_json(G);
    j["abar"] = abar;
    return j.dump();
}

MixingMeasure measure_from_json(const std::string& text, double* abar) {
    const auto j = parse(text);
    try {
        if (abar) *abar = j.value("abar", 1.0);
        return MixingMeasure(j.at("weights").get<std::vector<double>>(),
                             TopicMatrix(j.at("topics").get<std::vector<std::vector<double>>>()));
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad measure JSON: ") + e.what());
    }
}

std::string report_to_json(const IdentifiabilityReport& r) {
    json j{{"K0", r.K0},
           {"K_fit", r.K_fit},
           {"N", r.N},
           {"model", to_string(r.model)},
           {"verdict", to_string(r.verdict)},
           {"witness_tv", finite_or_null(r.witness_tv)},
           {"witness_w1", finite_or_null(r.witness_w1)},
           {"restarts", r.restarts},
           {"best_objective", finite_or_null(r.best_objective)},
           {"worst_objective", finite_or_null(r.worst_objective)},
           {"evaluations", r.evaluations}};
    j["witness"] = r.witness ? measure_json(*r.witness) : json(nullptr);
    return j.dump();
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> header)
    : out_(path, std::ios::binary), columns_(header.size()), path_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

CsvWriter& CsvWriter::field(const std::string& s) {
    if (in_row_ == columns_) throw std::logic_error("too many fields in CSV row for " + path_);
    out_ << (in_row_++ ? "," : "") << s;
    return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }
CsvWriter& CsvWriter::field(std::size_t v) { return field(std::to_string(v)); }
CsvWriter& CsvWriter::field(unsigned long long v) { return field(std::to_string(v)); }

void CsvWriter::end_row() {
    if (in_row_ != columns_) throw std::logic_error("short CSV row for " + path_);
    out_ << '\n';
    in_row_ = 0;
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) throw std::runtime_error("write failed for " + path_);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace dirtensor
