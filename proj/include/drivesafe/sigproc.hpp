#pragma once

// Sensor-stream preprocessing and window feature extraction for the
// physiological (EMG, ECG, EDA, EEG) and cabin environment channels.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drivesafe::sigproc {

enum class Channel { EMG, ECG, EDA, EEG, Light, Temperature, Humidity };

inline constexpr std::array<Channel, 4> kPhysioChannels{Channel::EMG, Channel::ECG, Channel::EDA, Channel::EEG};
inline constexpr std::array<Channel, 3> kEnvChannels{Channel::Light, Channel::Temperature, Channel::Humidity};

[[nodiscard]] std::string_view to_string(Channel channel) noexcept;
[[nodiscard]] Channel parse_channel(std::string_view text);
[[nodiscard]] bool is_physiological(Channel channel) noexcept;

/// Samples/s: 256 for EMG/ECG/EDA, 8 for EEG, 0.25 for the cabin sensors
/// (30 points per 120 s observation period).
[[nodiscard]] double default_rate(Channel channel) noexcept;

struct SensorFrame {
    Channel channel = Channel::EMG;
    std::int64_t t0_ms = 0;
    double rate = 256.0;
    std::vector<double> samples;

    /// Throws DomainError on rate <= 0, DegenerateInputError on empty samples.
    void validate() const;
    [[nodiscard]] double period_ms() const noexcept { return 1000.0 / rate; }
    /// Timestamp of sample i.
    [[nodiscard]] std::int64_t time_of(std::size_t i) const noexcept;

    friend bool operator==(const SensorFrame &, const SensorFrame &) = default;
};

/// Passband for a channel. `low_hz == 0` means a pure low-pass at `high_hz`.
struct Band {
    double low_hz = 0.0;
    double high_hz = 0.0;

    friend bool operator==(const Band &, const Band &) = default;
};

/// EMG [20, 120], ECG [0.5, 40], EDA low-pass 1, EEG [0.5, 3.9]. Cabin
/// channels have no band and are not filtered.
[[nodiscard]] std::optional<Band> default_band(Channel channel) noexcept;

/// One biquad in transposed direct form II, a0 normalized to 1.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;

    [[nodiscard]] double dc_gain() const noexcept { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

/// Second-order-sections filter designed by bilinear transform of
/// Butterworth prototypes.
class SosFilter {
  public:
    [[nodiscard]] static SosFilter butterworth_bandpass(double low_hz, double high_hz, double rate);
    [[nodiscard]] static SosFilter butterworth_lowpass(double cutoff_hz, double rate);
    [[nodiscard]] static SosFilter butterworth_highpass(double cutoff_hz, double rate);

    [[nodiscard]] const std::vector<Biquad> &sections() const noexcept { return sections_; }
    /// Edge padding used by filtfilt; inputs must be strictly longer.
    [[nodiscard]] std::size_t pad_length() const noexcept { return 3 * (2 * sections_.size() + 1); }

    /// Causal pass with state initialized to the steady state of `x[0]`.
    [[nodiscard]] std::vector<double> filter(std::span<const double> x) const;
    /// Zero-phase forward-backward pass with odd-extension padding.
    [[nodiscard]] std::vector<double> filtfilt(std::span<const double> x) const;

  private:
    std::vector<Biquad> sections_;
};

/// Zero-phase order-4 Butterworth bandpass. Requires 0 < low < high < rate/2
/// (DomainError) and more samples than the filter pad (DegenerateInputError).
[[nodiscard]] SensorFrame bandpass_filter(const SensorFrame &frame, double low_hz, double high_hz);
[[nodiscard]] SensorFrame lowpass_filter(const SensorFrame &frame, double cutoff_hz);

/// Applies the channel's default band (if any) and, for ECG, the 15-sample
/// smoothing.
[[nodiscard]] SensorFrame preprocess(const SensorFrame &frame);

inline constexpr int kDefaultSmoothingWindow = 15;

/// Trailing moving average. Output has length n - window + 1; output[i]
/// averages input[i .. i + window - 1] and is stamped at the window's end.
[[nodiscard]] SensorFrame moving_average(const SensorFrame &frame, int window = kDefaultSmoothingWindow);
[[nodiscard]] std::vector<double> moving_average(std::span<const double> x, int window = kDefaultSmoothingWindow);

struct WindowFeatures {
    double mean = 0;
    double min = 0;
    double max = 0;
    double std = 0;  ///< population (divisor n)
    double end_start_diff = 0;
    double max_min_diff = 0;

    friend bool operator==(const WindowFeatures &, const WindowFeatures &) = default;
};

/// Needs at least two samples.
[[nodiscard]] WindowFeatures window_features(std::span<const double> samples);

struct DerivativeFeatures {
    double mean = 0;
    double variance = 0;  ///< population
    double d1_mean = 0;   ///< mean of forward differences x rate
    double d2_mean = 0;   ///< mean of second differences x rate^2
};

/// Needs at least three samples.
[[nodiscard]] DerivativeFeatures derivative_features(std::span<const double> samples, double rate = 1.0);

inline constexpr std::size_t kDefaultEnvWindow = 30;

struct EnvSnapshot {
    WindowFeatures light;
    WindowFeatures temperature;
    WindowFeatures humidity;
    std::size_t window_len = kDefaultEnvWindow;
    /// Timestamp of the newest sample used, across the three channels.
    std::int64_t t_end_ms = 0;
};

/// Window features over the trailing `window` samples of each channel
/// (Gaussian ML mean and population spread).
[[nodiscard]] EnvSnapshot env_snapshot(const SensorFrame &light, const SensorFrame &temperature,
                                       const SensorFrame &humidity, std::size_t window = kDefaultEnvWindow);

struct ChannelFeatures {
    WindowFeatures window;
    DerivativeFeatures derivatives;
};

/// Feature bundle of one observation period for the physiological channels.
struct PhysioFeatures {
    std::optional<ChannelFeatures> emg, ecg, eda, eeg;

    [[nodiscard]] const std::optional<ChannelFeatures> &get(Channel channel) const;
    [[nodiscard]] std::optional<ChannelFeatures> &get(Channel channel);
};

/// preprocess() followed by window and derivative features.
[[nodiscard]] ChannelFeatures channel_features(const SensorFrame &frame);

/// Replay CSV with header `t_ms,value`; `rate` comes from the scenario manifest.
[[nodiscard]] SensorFrame read_sensor_csv(std::istream &in, Channel channel, double rate, std::string_view source);
[[nodiscard]] SensorFrame load_sensor_csv(const std::string &path, Channel channel, double rate);
void write_sensor_csv(std::ostream &out, const SensorFrame &frame);

}  // namespace drivesafe::sigproc
