#pragma once

// JSON and CSV serialization. JSON travels as text so that callers do not
// depend on a particular JSON library.

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "dirtensor/identifiability.hpp"
#include "dirtensor/models.hpp"
#include "dirtensor/tensor.hpp"

namespace dirtensor {

/// {"shape": [...], "data": [...]}
std::string tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const std::string& text);

/// {"V": V, "N": N, "docs": [[...], ...]}
std::string corpus_to_json(const Corpus& c);
Corpus corpus_from_json(const std::string& text);

/// {"abar": abar, "weights": [...], "topics": [[...], ...]}
std::string measure_to_json(const MixingMeasure& G, double abar);
MixingMeasure measure_from_json(const std::string& text, double* abar = nullptr);

std::string report_to_json(const IdentifiabilityReport& r);

/// Shortest round-tripping decimal form (%.17g).
std::string format_double(double v);

/// Comma separated rows with a fixed header; fields are written as given.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::vector<std::string> header);
    CsvWriter& field(const std::string& s);
    CsvWriter& field(double v);
    CsvWriter& field(std::size_t v);
    CsvWriter& field(unsigned long long v);
    void end_row();
    void close();

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
    std::size_t in_row_ = 0;
    std::string path_;
};

std::string read_text_file(const std::string& path);

}  // namespace dirtensor
