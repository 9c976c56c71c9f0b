#include "miloc/dataset.hpp"

#include "miloc/binary_io.hpp"
#include "miloc/rng.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace miloc {

std::string to_string(Split split)
{
    switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    case Split::all: return "all";
    }
    return "?";
}

nn::Tensor LabeledDataset::sample(Eigen::Index i) const { return nn::Tensor({dim()}, inputs.col(i)); }

std::vector<long long> LabeledDataset::class_counts() const
{
    std::vector<long long> counts(static_cast<std::size_t>(num_classes), 0);
    for (int y : labels)
        ++counts.at(static_cast<std::size_t>(y));
    return counts;
}

void LabeledDataset::validate() const
{
    if (static_cast<Eigen::Index>(labels.size()) != inputs.cols())
        throw std::invalid_argument("dataset has " + std::to_string(inputs.cols()) + " inputs but "
                                    + std::to_string(labels.size()) + " labels");
    for (int y : labels)
        if (y < 0 || y >= num_classes)
            throw std::invalid_argument("dataset label " + std::to_string(y) + " outside [0, "
                                        + std::to_string(num_classes) + ")");
}

LabeledDataset permute_labels(const LabeledDataset& data, std::uint64_t seed)
{
    LabeledDataset out = data;
    Rng rng(seed);
    shuffle(out.labels, rng);
    return out;
}

void write_dataset(std::ostream& out, const LabeledDataset& data)
{
    data.validate();
    io::write_magic(out, "MLDS");
    io::write<std::uint32_t>(out, 1);
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(data.split));
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(data.dim()));
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(data.num_classes));
    io::write<std::uint64_t>(out, static_cast<std::uint64_t>(data.size()));
    out.write(reinterpret_cast<const char*>(data.inputs.data()),
              static_cast<std::streamsize>(data.inputs.size() * sizeof(double)));
    for (int y : data.labels)
        io::write<std::uint8_t>(out, static_cast<std::uint8_t>(y));
    if (!out)
        throw std::runtime_error("failed to write dataset");
}

LabeledDataset read_dataset(std::istream& in)
{
    io::expect_magic(in, "MLDS");
    if (io::read<std::uint32_t>(in, "dataset version") != 1)
        throw std::runtime_error("unsupported dataset version");
    LabeledDataset data;
    data.split = static_cast<Split>(io::read<std::uint32_t>(in, "split"));
    const auto dim = io::read<std::uint32_t>(in, "dim");
    data.num_classes = static_cast<int>(io::read<std::uint32_t>(in, "class count"));
    const auto n = io::read<std::uint64_t>(in, "sample count");
    data.inputs.resize(dim, static_cast<Eigen::Index>(n));
    in.read(reinterpret_cast<char*>(data.inputs.data()),
            static_cast<std::streamsize>(data.inputs.size() * sizeof(double)));
    if (!in)
        throw std::runtime_error("truncated dataset inputs");
    data.labels.resize(n);
    for (auto& y : data.labels)
        y = io::read<std::uint8_t>(in, "labels");
    data.validate();
    return data;
}

void save_dataset(const std::filesystem::path& path, const LabeledDataset& data)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_dataset(out, data);
}

LabeledDataset load_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open dataset " + path.string());
    return read_dataset(in);
}

void write_csv(std::ostream& out, const LabeledDataset& data)
{
    out << "label";
    for (Eigen::Index d = 0; d < data.dim(); ++d)
        out << ",x" << d;
    out << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        out << data.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index d = 0; d < data.dim(); ++d)
            out << ',' << data.inputs(d, i);
        out << '\n';
    }
}

} // namespace miloc
