#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lcfuse/error.hpp"

namespace lcfuse {

// Minimal reference classifier: per-class diagonal-Gaussian centroids scored
// by a temperature-controlled softmax over negative Mahalanobis distances.
// It exists so synthetic end-to-end runs can produce probability rasters
// without external ML tooling; production pipelines feed externally
// estimated probability rasters instead.

constexpr double kVarianceFloor = 1e-6;

struct ClassifierModel {
  int num_classes = 0;
  int num_features = 0;
  double temperature = 1.0;
  std::vector<double> centroids;  // num_classes * num_features
  std::vector<double> variances;  // num_classes * num_features, >= kVarianceFloor

  double centroid(int cls, int f) const { return centroids[cls * num_features + f]; }
  double variance(int cls, int f) const { return variances[cls * num_features + f]; }
};

inline ClassifierModel train_classifier(const std::vector<std::vector<double>>& features,
                                        const std::vector<int>& labels, int num_classes,
                                        double temperature = 1.0) {
  require(num_classes >= 2, ErrorCode::InvalidArgument, "need at least 2 classes");
  require(features.size() == labels.size(), ErrorCode::InvalidArgument,
          "feature/label count mismatch");
  require(!features.empty(), ErrorCode::InvalidArgument, "no training samples");
  require(temperature > 0.0, ErrorCode::InvalidArgument, "temperature must be positive");
  const int nf = static_cast<int>(features[0].size());

  std::vector<std::int64_t> count(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes, ErrorCode::InvalidArgument,
            "label out of range");
    require(static_cast<int>(features[i].size()) == nf, ErrorCode::DimensionMismatch,
            "inconsistent feature dimension");
    ++count[static_cast<std::size_t>(labels[i])];
  }
  for (int cls = 0; cls < num_classes; ++cls)
    require(count[cls] >= 2, ErrorCode::ClassUndersampled,
            "class " + std::to_string(cls) + " has " + std::to_string(count[cls]) +
                " samples, need at least 2");

  ClassifierModel model;
  model.num_classes = num_classes;
  model.num_features = nf;
  model.temperature = temperature;
  model.centroids.assign(static_cast<std::size_t>(num_classes) * nf, 0.0);
  model.variances.assign(static_cast<std::size_t>(num_classes) * nf, 0.0);

  for (std::size_t i = 0; i < features.size(); ++i) {
    const int cls = labels[i];
    for (int f = 0; f < nf; ++f) model.centroids[cls * nf + f] += features[i][f];
  }
  for (int cls = 0; cls < num_classes; ++cls)
    for (int f = 0; f < nf; ++f)
      model.centroids[cls * nf + f] /= static_cast<double>(count[cls]);

  for (std::size_t i = 0; i < features.size(); ++i) {
    const int cls = labels[i];
    for (int f = 0; f < nf; ++f) {
      const double d = features[i][f] - model.centroids[cls * nf + f];
      model.variances[cls * nf + f] += d * d;
    }
  }
  for (int cls = 0; cls < num_classes; ++cls)
    for (int f = 0; f < nf; ++f) {
      double& v = model.variances[cls * nf + f];
      v = std::max(v / static_cast<double>(count[cls]), kVarianceFloor);
    }
  return model;
}

/// Softmax over -distance/temperature; strictly positive and normalized.
inline std::vector<double> predict_proba(const ClassifierModel& model,
                                         std::span<const double> features) {
  require(static_cast<int>(features.size()) == model.num_features,
          ErrorCode::DimensionMismatch,
          "expected " + std::to_string(model.num_features) + " features, got " +
              std::to_string(features.size()));
  std::vector<double> logits(static_cast<std::size_t>(model.num_classes));
  for (int cls = 0; cls < model.num_classes; ++cls) {
    double d = 0.0;
    for (int f = 0; f < model.num_features; ++f) {
      const double r = features[f] - model.centroid(cls, f);
      d += r * r / model.variance(cls, f);
    }
    logits[static_cast<std::size_t>(cls)] = -d / model.temperature;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& l : logits) {
    // floor keeps far-away classes strictly positive through exp underflow
    l = std::max(std::exp(l - top), 1e-300);
    sum += l;
  }
  for (double& l : logits) l /= sum;
  return logits;
}

// ---- model file (key-value header, then centroid/variance CSV blocks) ----

inline void write_classifier(const ClassifierModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoFailure, "cannot write " + path.string());
  out << "lcfuse_classifier: 1\n";
  out << "num_classes: " << m.num_classes << "\n";
  out << "num_features: " << m.num_features << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", m.temperature);
  out << "temperature: " << buf << "\n";
  auto block = [&](const char* name, const std::vector<double>& values) {
    out << name << ":\n";
    for (int cls = 0; cls < m.num_classes; ++cls) {
      for (int f = 0; f < m.num_features; ++f) {
        std::snprintf(buf, sizeof(buf), "%.17g", values[cls * m.num_features + f]);
        out << (f ? "," : "") << buf;
      }
      out << "\n";
    }
  };
  block("centroids", m.centroids);
  block("variances", m.variances);
  out.flush();
  require(out.good(), ErrorCode::IoFailure, "write failed: " + path.string());
}

inline ClassifierModel read_classifier(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoFailure, "cannot open " + path.string());
  std::string line;
  auto next_line = [&]() {
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::MalformedHeader,
            "truncated classifier file");
    return line;
  };
  require(next_line() == "lcfuse_classifier: 1", ErrorCode::MalformedHeader,
          "not a classifier file: " + path.string());
  auto value_of = [&](const std::string& key) {
    next_line();
    require(line.rfind(key + ": ", 0) == 0, ErrorCode::MalformedHeader,
            "expected " + key);
    return line.substr(key.size() + 2);
  };
  ClassifierModel m;
  try {
    m.num_classes = std::stoi(value_of("num_classes"));
    m.num_features = std::stoi(value_of("num_features"));
    m.temperature = std::stod(value_of("temperature"));
  } catch (const std::exception&) {
    fail(ErrorCode::MalformedHeader, "bad classifier header field");
  }
  require(m.num_classes >= 2 && m.num_features >= 1 && m.temperature > 0.0,
          ErrorCode::MalformedHeader, "bad classifier dimensions");

  auto block = [&](const char* name, std::vector<double>& values) {
    require(next_line() == std::string(name) + ":", ErrorCode::MalformedHeader,
            "expected " + std::string(name) + " block");
    values.clear();
    for (int cls = 0; cls < m.num_classes; ++cls) {
      std::istringstream ls(next_line());
      std::string field;
      int nf = 0;
      while (std::getline(ls, field, ',')) {
        try {
          values.push_back(std::stod(field));
        } catch (const std::exception&) {
          fail(ErrorCode::MalformedHeader, "bad value in " + std::string(name));
        }
        ++nf;
      }
      require(nf == m.num_features, ErrorCode::MalformedHeader,
              "wrong row width in " + std::string(name));
    }
  };
  block("centroids", m.centroids);
  block("variances", m.variances);
  return m;
}

}  // namespace lcfuse
