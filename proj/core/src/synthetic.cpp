#include "bridgemt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "bridgemt/config.hpp"
#include "bridgemt/rng.hpp"

namespace bridgemt {

std::vector<std::string> SyntheticSpec::language_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < languages; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  return names;
}

LanguageTransform SyntheticSpec::transform_for(int index) const {
  const std::string name(1, static_cast<char>('a' + index));
  if (auto it = transforms.find(name); it != transforms.end()) return it->second;
  LanguageTransform t;
  t.prefix = name;
  if (index <= 1) {
    t.order = LanguageTransform::Order::identity;
  } else if (index == 3) {
    t.order = LanguageTransform::Order::reverse;
  } else {
    t.order = LanguageTransform::Order::rotate;
    t.rotate_by = index - 2;
  }
  return t;
}

void SyntheticSpec::validate() const {
  if (languages < 2) throw std::invalid_argument("synthetic spec: need at least 2 languages");
  if (languages > 26) throw std::invalid_argument("synthetic spec: at most 26 languages (named a..z)");
  if (pivot_vocab < 20) throw std::invalid_argument("synthetic spec: pivot_vocab must be >= 20");
  if (min_len < 1 || max_len < min_len) throw std::invalid_argument("synthetic spec: bad sentence length range");
  if (train_size < 1 || dev_size < 1 || test_size < 1) {
    throw std::invalid_argument("synthetic spec: split sizes must be positive");
  }
  if (zipf_exponent <= 0) throw std::invalid_argument("synthetic spec: zipf_exponent must be positive");
}

namespace {

LanguageTransform parse_transform(const std::string& lang, const std::string& value) {
  LanguageTransform t;
  t.prefix = lang;
  if (value == "identity") {
    t.order = LanguageTransform::Order::identity;
  } else if (value == "reverse") {
    t.order = LanguageTransform::Order::reverse;
  } else if (value.rfind("rotate:", 0) == 0) {
    t.order = LanguageTransform::Order::rotate;
    t.rotate_by = std::stoi(value.substr(7));
  } else {
    throw std::invalid_argument("synthetic spec: unknown transform '" + value +
                                "' (expected identity, reverse or rotate:<j>)");
  }
  return t;
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const std::map<std::string, std::string>& kv) {
  SyntheticSpec s;
  for (const auto& [key, v] : kv) {
    if (key == "languages") s.languages = std::stoi(v);
    else if (key == "pivot_vocab") s.pivot_vocab = std::stoi(v);
    else if (key == "min_len") s.min_len = std::stoi(v);
    else if (key == "max_len") s.max_len = std::stoi(v);
    else if (key == "train_size") s.train_size = std::stoi(v);
    else if (key == "dev_size") s.dev_size = std::stoi(v);
    else if (key == "test_size") s.test_size = std::stoi(v);
    else if (key == "seed") s.seed = std::stoull(v);
    else if (key == "zipf_exponent") s.zipf_exponent = std::stod(v);
    else if (key.rfind("transform.", 0) == 0) {
      const std::string lang = key.substr(10);
      s.transforms[lang] = parse_transform(lang, v);
    } else {
      throw std::invalid_argument("synthetic spec: unknown key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

SyntheticSpec load_synthetic_spec(const std::string& path) { return parse_synthetic_spec(parse_kv_file(path)); }

std::vector<std::string> render_sentence(const std::vector<int>& pivot, const LanguageTransform& t) {
  std::vector<int> ordered(pivot);
  switch (t.order) {
    case LanguageTransform::Order::identity: break;
    case LanguageTransform::Order::reverse: std::reverse(ordered.begin(), ordered.end()); break;
    case LanguageTransform::Order::rotate: {
      const int n = static_cast<int>(ordered.size());
      const int j = ((t.rotate_by % n) + n) % n;
      std::rotate(ordered.begin(), ordered.begin() + j, ordered.end());
      break;
    }
  }
  std::vector<std::string> out;
  out.reserve(ordered.size());
  for (int tok : ordered) out.push_back(t.prefix + std::to_string(tok));
  return out;
}

void generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);

  // Cumulative Zipf weights over tokens 1..P.
  std::vector<double> cdf(spec.pivot_vocab);
  double total = 0;
  for (int t = 0; t < spec.pivot_vocab; ++t) {
    total += 1.0 / std::pow(static_cast<double>(t + 1), spec.zipf_exponent);
    cdf[t] = total;
  }
  for (auto& v : cdf) v /= total;

  Rng rng(spec.seed);
  auto sample_sentence = [&]() {
    const int len = spec.min_len + static_cast<int>(rng.below(spec.max_len - spec.min_len + 1));
    std::vector<int> s(len);
    for (int i = 0; i < len; ++i) {
      const double u = rng.real();
      s[i] = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) + 1;
    }
    return s;
  };

  const std::vector<std::pair<std::string, int>> splits = {
      {"train", spec.train_size}, {"dev", spec.dev_size}, {"test", spec.test_size}};
  const auto names = spec.language_names();
  for (const auto& [split, count] : splits) {
    std::vector<std::ofstream> files;
    for (const auto& lang : names) {
      files.emplace_back(out_dir + "/" + split + "." + lang + ".txt", std::ios::binary);
      if (!files.back()) throw std::runtime_error("cannot write corpus file in " + out_dir);
    }
    for (int i = 0; i < count; ++i) {
      const auto pivot = sample_sentence();
      for (int k = 0; k < spec.languages; ++k) {
        const auto toks = render_sentence(pivot, spec.transform_for(k));
        for (size_t j = 0; j < toks.size(); ++j) {
          if (j) files[k] << ' ';
          files[k] << toks[j];
        }
        files[k] << '\n';
      }
    }
  }
}

}  // namespace bridgemt
