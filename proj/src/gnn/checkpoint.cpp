/*******************************************************************************
 * @file:   checkpoint.cpp
 ******************************************************************************/
#include "coarsegnn/gnn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "coarsegnn/errors.hpp"

namespace coarsegnn {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'G', 'N', 'N', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint payload is little-endian");

template <typename T> void put(std::ostream &out, const T value) {
  out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <typename T> T get(std::istream &in, const std::string &where) {
  T value{};
  if (!in.read(reinterpret_cast<char *>(&value), sizeof(T))) {
    throw FormatError(where + ": truncated checkpoint");
  }
  return value;
}

} // namespace

void save_checkpoint(const GcnParams &params, const std::filesystem::path &path) {
  check_params(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  nlohmann::json header;
  header["L"] = params.depth();
  header["dims"] = params.dims();
  header["seed"] = params.seed;
  const std::string text = header.dump();

  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  params.for_each([&](const Matrix &w) {
    out.write(reinterpret_cast<const char *>(w.data()),
              static_cast<std::streamsize>(w.size() * sizeof(double)));
  });
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

GcnParams load_checkpoint(const std::filesystem::path &path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint " + where);
  }
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError(where + ": not a checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, where);
  if (version != kCheckpointVersion) {
    throw FormatError(where + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto length = get<std::uint32_t>(in, where);
  std::string text(length, '\0');
  if (!in.read(text.data(), length)) {
    throw FormatError(where + ": truncated header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(where + ": bad header: " + e.what());
  }

  GcnParams params;
  std::vector<Eigen::Index> dims;
  std::size_t depth = 0;
  try {
    dims = header.at("dims").get<std::vector<Eigen::Index>>();
    depth = header.at("L").get<std::size_t>();
    params.seed = header.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(where + ": bad header: " + e.what());
  }
  if (depth < 1 || dims.size() != depth + 2) {
    throw FormatError(where + ": header dims do not match L");
  }
  auto read_matrix = [&](const Eigen::Index rows, const Eigen::Index cols) {
    Matrix w(rows, cols);
    if (!in.read(reinterpret_cast<char *>(w.data()),
                 static_cast<std::streamsize>(w.size() * sizeof(double)))) {
      throw FormatError(where + ": truncated payload");
    }
    return w;
  };
  for (std::size_t l = 0; l < depth; ++l) {
    params.layers.push_back(read_matrix(dims[l], dims[l + 1]));
  }
  params.head = read_matrix(dims[depth], dims[depth + 1]);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(where + ": trailing bytes after payload");
  }
  return params;
}

} // namespace coarsegnn
