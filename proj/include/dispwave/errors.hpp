#pragma once

#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace dispwave
{
    enum class ErrorCode
    {
        domain,
        accuracy,
        capacity,
        assembly,
        feshbach_l00_singular,
        feshbach_schur_singular,
        zero_potential,
        near_singular,
        spectral_assumption_violated,
        configuration,
        instability,
        divergence,
        numeric
    };

    const char* to_string(ErrorCode code);

    class Error : public std::runtime_error
    {
    public:
        Error(ErrorCode code, const std::string& what)
            : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

        ErrorCode code() const noexcept { return code_; }

    private:
        ErrorCode code_;
    };

    /// Process-wide sink for non-fatal numerical warnings (truncation, grazing
    /// cone cells, near-singular solves). The CLI drains it into its run report.
    class Warnings
    {
    public:
        static Warnings& instance();

        void add(const std::string& category, const std::string& message);
        std::vector<std::string> drain();
        std::size_t count(const std::string& category) const;

    private:
        mutable std::mutex mutex_;
        std::vector<std::pair<std::string, std::string>> entries_;
    };

    inline void warn(const std::string& category, const std::string& message)
    {
        Warnings::instance().add(category, message);
    }
} // namespace dispwave
