#ifndef NETMIG_TESTS_HELPERS_HPP
#define NETMIG_TESTS_HELPERS_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace testutil {

inline std::string fixture(const std::string& name) {
    return std::string(NETMIG_FIXTURES_DIR) + "/" + name;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto candidate = base / ("netmig_test_" + std::to_string(rd()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("cannot create temp directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string dir() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

inline std::string write_file(const TempDir& dir, const std::string& name,
                              const std::string& content) {
    const std::string path = dir.file(name);
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace testutil

#endif
