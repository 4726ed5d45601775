// Copyright 2026 pse-toolkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pse/model/params.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pse/error.h"
#include "pse/model/sefpnet.h"

namespace pse {

static_assert(std::endian::native == std::endian::little,
              "archive I/O assumes a little-endian host");

void ParameterStore::Add(const std::string& name, nn::Tensor value) {
  if (vars_.contains(name))
    throw InvalidInput("duplicate parameter '" + name + "'");
  names_.push_back(name);
  vars_.emplace(name, nn::Var(std::move(value), /*requires_grad=*/true));
}

bool ParameterStore::Has(const std::string& name) const {
  return vars_.contains(name);
}

const nn::Var& ParameterStore::Get(const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw InvalidInput("unknown parameter '" + name + "'");
  return it->second;
}

nn::Tensor& ParameterStore::MutableValue(const std::string& name) {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw InvalidInput("unknown parameter '" + name + "'");
  return it->second.mutable_value();
}

ParameterStore ParameterStore::Clone() const {
  ParameterStore copy;
  copy.config = config;
  copy.seed = seed;
  for (const auto& name : names_) copy.Add(name, Get(name).value());
  return copy;
}

void ParameterStore::ZeroGrad() {
  for (auto& [name, var] : vars_) var.ZeroGrad();
}

void ParameterStore::CheckFinite() const {
  for (const auto& name : names_)
    if (!Get(name).value().AllFinite())
      throw NumericalError(name, "non-finite parameter");
}

int64_t CountParameters(const ParameterStore& params) {
  int64_t total = 0;
  for (const auto& name : params.names()) total += params.Get(name).value().size();
  return total;
}

namespace {

constexpr char kMagic[8] = {'P', 'S', 'E', 'A', 'R', 'C', 'H', '1'};

uint64_t Fnv1a(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void Put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& bytes, size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T Get() {
    T v;
    std::memcpy(&v, Take(sizeof(T)), sizeof(T));
    return v;
  }
  std::string GetString(size_t n) { return std::string(Take(n), n); }
  void GetDoubles(double* out, size_t n) {
    std::memcpy(out, Take(n * sizeof(double)), n * sizeof(double));
  }
  bool done() const { return pos_ == end_; }

 private:
  const char* Take(size_t n) {
    if (n > end_ - pos_) throw CheckpointError("archive truncated");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  const std::string& bytes_;
  size_t end_;
  size_t pos_ = 0;
};

}  // namespace

void WriteArchive(const std::string& path, const Archive& archive) {
  std::string out(kMagic, sizeof(kMagic));
  const std::string header = archive.header.dump();
  Put<uint64_t>(out, header.size());
  out += header;
  Put<uint32_t>(out, static_cast<uint32_t>(archive.arrays.size()));
  for (const auto& [name, t] : archive.arrays) {
    Put<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out += name;
    out.push_back('d');
    Put<uint32_t>(out, static_cast<uint32_t>(t.rank()));
    for (int64_t d : t.shape()) Put<int64_t>(out, d);
    out.append(reinterpret_cast<const char*>(t.data()),
               static_cast<size_t>(t.size()) * sizeof(double));
  }
  Put<uint64_t>(out, Fnv1a(out));

  // Write to a sibling temp file and rename so readers never see a torn file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IOError("cannot open '" + tmp + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IOError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IOError("cannot move archive into place at '" + path + "'");
}

Archive ReadArchive(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IOError("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(f)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("'" + path + "' is not a parameter archive");
  const size_t body = bytes.size() - sizeof(uint64_t);
  uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != Fnv1a(bytes.substr(0, body)))
    throw CheckpointError("'" + path + "' failed its checksum");

  Reader r(bytes, body);
  r.GetString(sizeof(kMagic));
  Archive archive;
  try {
    archive.header = nlohmann::json::parse(r.GetString(r.Get<uint64_t>()));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("archive header: ") + e.what());
  }
  const uint32_t count = r.Get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.GetString(r.Get<uint32_t>());
    if (r.Get<char>() != 'd')
      throw CheckpointError("array '" + name + "' has an unsupported dtype");
    const uint32_t rank = r.Get<uint32_t>();
    if (rank > 8) throw CheckpointError("array '" + name + "' has bad rank");
    nn::Shape shape(rank);
    int64_t n = 1;
    for (auto& d : shape) {
      d = r.Get<int64_t>();
      if (d <= 0 || d > (int64_t{1} << 32))
        throw CheckpointError("array '" + name + "' has a bad dimension");
      n *= d;
    }
    nn::Tensor t(shape);
    r.GetDoubles(t.data(), static_cast<size_t>(n));
    archive.arrays.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw CheckpointError("trailing bytes in '" + path + "'");
  return archive;
}

void SaveParameters(const std::string& path, const ParameterStore& params) {
  Archive a;
  a.header = {{"kind", "parameters"},
              {"model", params.config},
              {"seed", params.seed}};
  for (const auto& name : params.names())
    a.arrays.emplace_back(name, params.Get(name).value());
  WriteArchive(path, a);
}

ParameterStore LoadParameters(const std::string& path) {
  const Archive a = ReadArchive(path);
  ParameterStore store;
  try {
    if (a.header.value("kind", "") != "parameters")
      throw CheckpointError("'" + path + "' does not hold model parameters");
    store.config = a.header.at("model").get<ModelConfig>();
    store.seed = a.header.at("seed").get<uint64_t>();
    store.config.Validate();
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError("'" + path + "' header: " + e.what());
  }

  const SefPNet model(store.config);
  const ParamSpecs specs = model.ParameterSpecs();
  if (specs.size() != a.arrays.size())
    throw CheckpointError("'" + path + "' holds " +
                          std::to_string(a.arrays.size()) +
                          " arrays, the configured model declares " +
                          std::to_string(specs.size()));
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& [name, t] = a.arrays[i];
    if (name != specs[i].name)
      throw CheckpointError("array " + std::to_string(i) + " is '" + name +
                            "', expected '" + specs[i].name + "'");
    if (t.shape() != specs[i].shape)
      throw CheckpointError("'" + name + "' has shape " +
                            nn::ShapeToString(t.shape()) + ", expected " +
                            nn::ShapeToString(specs[i].shape));
    if (!t.AllFinite())
      throw CheckpointError("'" + name + "' contains non-finite values");
    store.Add(name, t);
  }
  return store;
}

}  // namespace pse
