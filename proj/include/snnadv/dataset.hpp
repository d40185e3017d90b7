#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "snnadv/tensor.hpp"

namespace snnadv {

struct Sample {
    Tensor x;
    int label = 0;
};

struct Dataset {
    std::vector<Sample> items;
    int num_classes = 10;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
    const Sample& operator[](std::size_t i) const { return items[i]; }
    Sample& operator[](std::size_t i) { return items[i]; }
    Shape input_shape() const;  // throws ValueError when empty
};

enum class DatasetFormat { MnistIdx, Cifar10Bin };

// MNIST IDX pair (big-endian headers, image magic 0x00000803, label magic
// 0x00000801). Pixels come out zero-mean per channel with |value| <= 1.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       std::optional<std::size_t> limit = {});

// CIFAR-10 binary: 3073-byte records, 1 label byte + 3072 channel-planar
// R,G,B pixel bytes. Same normalization as above.
Dataset load_cifar10_bin(const std::string& path, std::optional<std::size_t> limit = {});

// Format dispatcher. For MnistIdx, `path` is the images file; the labels
// file is found by the conventional idx3->idx1 / images->labels renaming.
Dataset load_dataset(const std::string& path, DatasetFormat format,
                     std::optional<std::size_t> limit = {});

std::string mnist_labels_path_for(const std::string& images_path);

// Versioned binary container for datasets and crafted adversarial sets.
void save_dataset_container(const Dataset& ds, const std::string& path,
                            const std::string& note = "");
Dataset load_dataset_container(const std::string& path,
                               std::optional<std::size_t> limit = {},
                               std::string* note_out = nullptr);

}  // namespace snnadv
