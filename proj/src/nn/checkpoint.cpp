#include "miloc/nn/checkpoint.hpp"

#include "miloc/binary_io.hpp"

#include <fstream>

namespace miloc::nn {

void write_checkpoint(std::ostream& out, const Network& net)
{
    io::write_magic(out, "MLNN");
    io::write<std::uint32_t>(out, kCheckpointVersion);
    const auto& in = net.input_shape();
    io::write<std::int64_t>(out, in.channels);
    io::write<std::int64_t>(out, in.height);
    io::write<std::int64_t>(out, in.width);

    const auto descriptors = net.descriptors();
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(descriptors.size()));
    for (const auto& d : descriptors) {
        io::write<std::uint32_t>(out, static_cast<std::uint32_t>(d.kind));
        io::write<std::uint32_t>(out, static_cast<std::uint32_t>(d.dims.size()));
        for (Index v : d.dims)
            io::write<std::int64_t>(out, v);
    }

    const auto params = net.params();
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const Tensor* t : params) {
        io::write<std::uint32_t>(out, static_cast<std::uint32_t>(t->rank()));
        for (Index d : t->shape())
            io::write<std::int64_t>(out, d);
        out.write(reinterpret_cast<const char*>(t->values().data()),
                  static_cast<std::streamsize>(t->size() * sizeof(double)));
    }
    if (!out)
        throw std::runtime_error("failed to write checkpoint");
}

Network read_checkpoint(std::istream& in)
{
    io::expect_magic(in, "MLNN");
    const auto version = io::read<std::uint32_t>(in, "checkpoint version");
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    LayerShape shape;
    shape.channels = io::read<std::int64_t>(in, "input shape");
    shape.height = io::read<std::int64_t>(in, "input shape");
    shape.width = io::read<std::int64_t>(in, "input shape");
    Network net(shape);

    const auto layer_count = io::read<std::uint32_t>(in, "layer count");
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        LayerDescriptor d;
        d.kind = static_cast<LayerKind>(io::read<std::uint32_t>(in, "layer kind"));
        const auto ndims = io::read<std::uint32_t>(in, "layer dims");
        for (std::uint32_t k = 0; k < ndims; ++k)
            d.dims.push_back(io::read<std::int64_t>(in, "layer dims"));
        net.add(make_layer(d));
    }

    auto params = net.params();
    const auto tensor_count = io::read<std::uint32_t>(in, "tensor count");
    if (tensor_count != params.size())
        throw std::runtime_error("checkpoint tensor count does not match its layers");
    for (Tensor* t : params) {
        const auto rank = io::read<std::uint32_t>(in, "tensor rank");
        std::vector<Index> tensor_shape;
        for (std::uint32_t k = 0; k < rank; ++k)
            tensor_shape.push_back(io::read<std::int64_t>(in, "tensor shape"));
        if (tensor_shape != t->shape())
            throw std::runtime_error("checkpoint tensor shape " + shape_string(tensor_shape)
                                     + " does not match layer parameter " + shape_string(t->shape()));
        in.read(reinterpret_cast<char*>(t->values().data()), static_cast<std::streamsize>(t->size() * sizeof(double)));
        if (!in)
            throw std::runtime_error("truncated checkpoint parameters");
    }
    return net;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_checkpoint(out, net);
}

Network load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

} // namespace miloc::nn
