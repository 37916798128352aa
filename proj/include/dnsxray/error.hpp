#pragma once

#include <stdexcept>
#include <string>

namespace dnsxray {

/// Every failure raised by the library carries a machine-readable kind
/// ("FileUnreadable", "SingleClassDataset", ...) plus a free-form detail.
class Error : public std::runtime_error {
public:
    Error(std::string kind, std::string detail)
        : std::runtime_error(kind + ": " + detail), kind_(std::move(kind)), detail_(std::move(detail)) {}

    const std::string& kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string kind_;
    std::string detail_;
};

} // namespace dnsxray
