/* Copyright 2026 The FilTag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <string>

#include "byte_io.h"
#include "filtag/errors.h"
#include "filtag/infer.h"
#include "json.hpp"

namespace filtag {
namespace {

using nlohmann::json;

constexpr int kModelFormatVersion = 1;

json ShapeToJson(const Shape3& s) {
  return json::array({s.channels, s.height, s.width});
}

Shape3 ShapeFromJson(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::kParse, what + ": shape must be [c, h, w]");
  }
  return Shape3{j[0].get<uint32_t>(), j[1].get<uint32_t>(),
                j[2].get<uint32_t>()};
}

json AppendBlocks(std::span<const Tensor3> blocks, std::string& blob) {
  json ref = {{"offset", blob.size()}, {"blocks", blocks.size()}};
  for (const Tensor3& t : blocks) AppendTensorBlock(t, blob);
  return ref;
}

std::vector<Tensor3> ReadBlocks(const json& ref, std::span<const char> blob,
                                const std::string& label) {
  if (!ref.is_object() || !ref.contains("offset") || !ref.contains("blocks")) {
    throw Error(ErrorCode::kParse, label + ": missing tensor reference");
  }
  const auto offset = ref.at("offset").get<uint64_t>();
  const auto count = ref.at("blocks").get<uint64_t>();
  if (offset > blob.size()) {
    throw Error(ErrorCode::kParse, label + ": weight offset " +
                                       std::to_string(offset) +
                                       " beyond end of weights file");
  }
  std::vector<Tensor3> out;
  size_t pos = offset;
  for (uint64_t i = 0; i < count; ++i) {
    size_t used = 0;
    try {
      out.push_back(ParseTensorBlock(blob.subspan(pos), &used));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, label + ": weights truncated or corrupt (" +
                                         e.what() + ")");
    }
    pos += used;
  }
  return out;
}

std::vector<float> Flat(const Tensor3& t) {
  return std::vector<float>(t.values().begin(), t.values().end());
}

Padding PaddingFromName(const std::string& s, const std::string& label) {
  if (s == "valid") return Padding::kValid;
  if (s == "same-zero") return Padding::kSameZero;
  throw Error(ErrorCode::kParse, label + ": unknown padding '" + s + "'");
}

Activation ActivationFromName(const std::string& s, const std::string& label) {
  if (s == "relu") return Activation::kRelu;
  if (s == "none") return Activation::kNone;
  throw Error(ErrorCode::kParse, label + ": unknown activation '" + s + "'");
}

std::filesystem::path WeightsPathFor(const std::filesystem::path& manifest) {
  std::filesystem::path p = manifest;
  p.replace_extension(".weights");
  return p;
}

}  // namespace

void SaveModel(const ModelSpec& model, const std::filesystem::path& path) {
  const std::vector<Shape3> shapes = model.Validate();
  const std::filesystem::path weights_path = WeightsPathFor(path);
  std::string blob;
  json layers = json::array();
  Shape3 in = model.input_shape;
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& layer = model.layers[i];
    json j = {{"kind", LayerKindName(layer)},
              {"input_shape", ShapeToJson(in)},
              {"output_shape", ShapeToJson(shapes[i])}};
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      j["out_channels"] = conv->out_channels;
      j["kernel_h"] = conv->kernel_h;
      j["kernel_w"] = conv->kernel_w;
      j["stride"] = conv->stride;
      j["padding"] = PaddingName(conv->padding);
      j["activation"] = ActivationName(conv->activation);
      j["weights"] = AppendBlocks(conv->weights, blob);
      const Tensor3 bias(Shape3{conv->out_channels, 1, 1}, conv->bias);
      j["bias"] = AppendBlocks(std::span(&bias, 1), blob);
    } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
      j["size"] = pool->size;
      j["stride"] = pool->stride;
    } else if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      j["in_dim"] = dense->in_dim;
      j["out_dim"] = dense->out_dim;
      j["activation"] = ActivationName(dense->activation);
      const Tensor3 w(Shape3{1, dense->out_dim, dense->in_dim}, dense->weights);
      j["weights"] = AppendBlocks(std::span(&w, 1), blob);
      const Tensor3 b(Shape3{dense->out_dim, 1, 1}, dense->bias);
      j["bias"] = AppendBlocks(std::span(&b, 1), blob);
    }
    layers.push_back(std::move(j));
    in = shapes[i];
  }
  const json manifest = {
      {"format_version", kModelFormatVersion},
      {"model_name", model.name},
      {"input_shape", ShapeToJson(model.input_shape)},
      {"class_names", model.class_names},
      {"weights_file", weights_path.filename().string()},
      {"weights_bytes", blob.size()},
      {"weights_crc32", internal::Crc32(blob)},
      {"layers", std::move(layers)},
  };
  internal::WriteFileBytes(weights_path.string(), blob);
  internal::WriteFileBytes(path.string(), manifest.dump(2) + "\n");
}

ModelSpec LoadModel(const std::filesystem::path& path) {
  json manifest;
  try {
    manifest = json::parse(internal::ReadFileBytes(path.string()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse,
                "model '" + path.string() + "': invalid JSON: " + e.what());
  }
  try {
    if (manifest.value("format_version", -1) != kModelFormatVersion) {
      throw Error(ErrorCode::kParse, "model '" + path.string() +
                                         "': unsupported format_version");
    }
    const std::filesystem::path weights_path =
        path.parent_path() / manifest.at("weights_file").get<std::string>();
    const std::string blob = internal::ReadFileBytes(weights_path.string());
    if (blob.size() != manifest.at("weights_bytes").get<uint64_t>()) {
      throw Error(ErrorCode::kParse,
                  "model '" + path.string() + "': weights file has " +
                      std::to_string(blob.size()) + " bytes, manifest says " +
                      std::to_string(manifest.at("weights_bytes").get<uint64_t>()));
    }
    if (manifest.contains("weights_crc32") &&
        manifest["weights_crc32"].get<uint32_t>() != internal::Crc32(blob)) {
      throw Error(ErrorCode::kChecksum, "model '" + path.string() +
                                            "': weights checksum mismatch");
    }

    ModelSpec model;
    model.name = manifest.at("model_name").get<std::string>();
    model.input_shape = ShapeFromJson(manifest.at("input_shape"), "model");
    model.class_names =
        manifest.at("class_names").get<std::vector<std::string>>();

    const json& layers = manifest.at("layers");
    for (size_t i = 0; i < layers.size(); ++i) {
      const json& j = layers[i];
      const std::string kind = j.at("kind").get<std::string>();
      const std::string label =
          "layer " + std::to_string(i) + " (" + kind + ")";
      if (kind == "conv") {
        ConvLayer conv;
        conv.out_channels = j.at("out_channels").get<uint32_t>();
        conv.kernel_h = j.at("kernel_h").get<uint32_t>();
        conv.kernel_w = j.at("kernel_w").get<uint32_t>();
        conv.stride = j.at("stride").get<uint32_t>();
        conv.padding = PaddingFromName(j.at("padding").get<std::string>(), label);
        conv.activation =
            ActivationFromName(j.at("activation").get<std::string>(), label);
        conv.weights = ReadBlocks(j.at("weights"), blob, label);
        if (conv.weights.size() != conv.out_channels) {
          throw Error(ErrorCode::kParse,
                      label + ": declares " + std::to_string(conv.out_channels) +
                          " filters but stores " +
                          std::to_string(conv.weights.size()) + " weight blocks");
        }
        const auto bias = ReadBlocks(j.at("bias"), blob, label);
        if (bias.size() != 1 || bias[0].size() != conv.out_channels) {
          throw Error(ErrorCode::kParse, label + ": bias count mismatch");
        }
        conv.bias = Flat(bias[0]);
        model.layers.emplace_back(std::move(conv));
      } else if (kind == "maxpool") {
        model.layers.emplace_back(MaxPoolLayer{j.at("size").get<uint32_t>(),
                                               j.at("stride").get<uint32_t>()});
      } else if (kind == "flatten") {
        model.layers.emplace_back(FlattenLayer{});
      } else if (kind == "dense") {
        DenseLayer dense;
        dense.in_dim = j.at("in_dim").get<uint32_t>();
        dense.out_dim = j.at("out_dim").get<uint32_t>();
        dense.activation =
            ActivationFromName(j.at("activation").get<std::string>(), label);
        const auto w = ReadBlocks(j.at("weights"), blob, label);
        const auto b = ReadBlocks(j.at("bias"), blob, label);
        if (w.size() != 1 ||
            w[0].size() != static_cast<size_t>(dense.in_dim) * dense.out_dim) {
          throw Error(ErrorCode::kParse, label + ": weight count mismatch");
        }
        if (b.size() != 1 || b[0].size() != dense.out_dim) {
          throw Error(ErrorCode::kParse, label + ": bias count mismatch");
        }
        dense.weights = Flat(w[0]);
        dense.bias = Flat(b[0]);
        model.layers.emplace_back(std::move(dense));
      } else if (kind == "softmax") {
        model.layers.emplace_back(SoftmaxLayer{});
      } else {
        throw Error(ErrorCode::kParse, label + ": unknown layer kind '" + kind +
                                           "' (expected conv, maxpool, "
                                           "flatten, dense, softmax)");
      }
    }

    std::vector<Shape3> shapes;
    try {
      shapes = model.Validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse,
                  "model '" + path.string() + "': " + e.what());
    }
    for (size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].contains("output_shape") &&
          ShapeFromJson(layers[i]["output_shape"], "layer") != shapes[i]) {
        throw Error(ErrorCode::kParse,
                    "layer " + std::to_string(i) + " (" +
                        LayerKindName(model.layers[i]) +
                        "): declared output shape " +
                        ShapeFromJson(layers[i]["output_shape"], "layer")
                            .ToString() +
                        " != computed " + shapes[i].ToString());
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse,
                "model '" + path.string() + "': " + e.what());
  }
}

}  // namespace filtag
