#include "drivesafe/sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>

#include <fmt/core.h>

#include "drivesafe/error.hpp"
#include "tsv.hpp"

namespace drivesafe::sigproc {

std::string_view to_string(Channel channel) noexcept {
    switch (channel) {
        case Channel::EMG: return "EMG";
        case Channel::ECG: return "ECG";
        case Channel::EDA: return "EDA";
        case Channel::EEG: return "EEG";
        case Channel::Light: return "Light";
        case Channel::Temperature: return "Temperature";
        case Channel::Humidity: return "Humidity";
    }
    return "?";
}

Channel parse_channel(std::string_view text) {
    for (auto c : {Channel::EMG, Channel::ECG, Channel::EDA, Channel::EEG, Channel::Light, Channel::Temperature,
                   Channel::Humidity}) {
        if (to_string(c) == text) {
            return c;
        }
    }
    throw DomainError(fmt::format("unknown channel '{}'", text));
}

bool is_physiological(Channel channel) noexcept {
    return channel == Channel::EMG || channel == Channel::ECG || channel == Channel::EDA || channel == Channel::EEG;
}

double default_rate(Channel channel) noexcept {
    switch (channel) {
        case Channel::EMG:
        case Channel::ECG:
        case Channel::EDA: return 256.0;
        case Channel::EEG: return 8.0;
        default: return 0.25;
    }
}

void SensorFrame::validate() const {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw DomainError(fmt::format("{} frame: sample rate must be positive", to_string(channel)));
    }
    if (samples.empty()) {
        throw DegenerateInputError(fmt::format("{} frame: no samples", to_string(channel)));
    }
}

std::int64_t SensorFrame::time_of(std::size_t i) const noexcept {
    return t0_ms + static_cast<std::int64_t>(std::llround(static_cast<double>(i) * 1000.0 / rate));
}

std::optional<Band> default_band(Channel channel) noexcept {
    switch (channel) {
        case Channel::EMG: return Band{20.0, 120.0};
        case Channel::ECG: return Band{0.5, 40.0};
        case Channel::EDA: return Band{0.0, 1.0};
        case Channel::EEG: return Band{0.5, 3.9};
        default: return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// Filter design (bilinear transform, Q = 1/sqrt(2) per second-order stage)

namespace {

constexpr double kButterworthQ = std::numbers::sqrt2 / 2.0;

Biquad lowpass_section(double cutoff, double rate) {
    const double w0 = 2.0 * std::numbers::pi * cutoff / rate;
    const double alpha = std::sin(w0) / (2.0 * kButterworthQ);
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 - cw) / 2.0 / a0;
    s.b1 = (1.0 - cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

Biquad highpass_section(double cutoff, double rate) {
    const double w0 = 2.0 * std::numbers::pi * cutoff / rate;
    const double alpha = std::sin(w0) / (2.0 * kButterworthQ);
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 + cw) / 2.0 / a0;
    s.b1 = -(1.0 + cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

void check_cutoff(double cutoff, double rate) {
    if (!(rate > 0.0)) {
        throw DomainError("sample rate must be positive");
    }
    if (!(cutoff > 0.0) || !(cutoff < rate / 2.0)) {
        throw DomainError(fmt::format("cutoff {} Hz outside (0, {}) Hz", cutoff, rate / 2.0));
    }
}

// Runs the cascade in place, each section starting from the steady state it
// would reach under a constant input equal to x[0].
void run_cascade(const std::vector<Biquad> &sections, std::vector<double> &x) {
    if (x.empty()) {
        return;
    }
    double level = x.front();
    for (const auto &s : sections) {
        const double y_ss = s.dc_gain() * level;
        double z1 = y_ss - s.b0 * level;
        double z2 = s.b2 * level - s.a2 * y_ss;
        for (auto &v : x) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
        level = y_ss;
    }
}

}  // namespace

SosFilter SosFilter::butterworth_bandpass(double low_hz, double high_hz, double rate) {
    check_cutoff(low_hz, rate);
    check_cutoff(high_hz, rate);
    if (!(low_hz < high_hz)) {
        throw DomainError(fmt::format("band [{}, {}] Hz is empty", low_hz, high_hz));
    }
    SosFilter f;
    f.sections_ = {highpass_section(low_hz, rate), lowpass_section(high_hz, rate)};
    return f;
}

SosFilter SosFilter::butterworth_lowpass(double cutoff_hz, double rate) {
    check_cutoff(cutoff_hz, rate);
    SosFilter f;
    f.sections_ = {lowpass_section(cutoff_hz, rate)};
    return f;
}

SosFilter SosFilter::butterworth_highpass(double cutoff_hz, double rate) {
    check_cutoff(cutoff_hz, rate);
    SosFilter f;
    f.sections_ = {highpass_section(cutoff_hz, rate)};
    return f;
}

std::vector<double> SosFilter::filter(std::span<const double> x) const {
    std::vector<double> y(x.begin(), x.end());
    run_cascade(sections_, y);
    return y;
}

std::vector<double> SosFilter::filtfilt(std::span<const double> x) const {
    const std::size_t pad = pad_length();
    const std::size_t n = x.size();
    if (n <= pad) {
        throw DegenerateInputError(
            fmt::format("{} samples do not cover the filter warm-up ({} samples needed)", n, pad + 1));
    }
    // Odd extension: 2*x[0] - x[pad..1] ... x ... 2*x[n-1] - x[n-2..n-1-pad]
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) {
        ext.push_back(2.0 * x[0] - x[i]);
    }
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) {
        ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    run_cascade(sections_, ext);
    std::reverse(ext.begin(), ext.end());
    run_cascade(sections_, ext);
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.end() - static_cast<std::ptrdiff_t>(pad)};
}

SensorFrame bandpass_filter(const SensorFrame &frame, double low_hz, double high_hz) {
    frame.validate();
    const auto filter = SosFilter::butterworth_bandpass(low_hz, high_hz, frame.rate);
    SensorFrame out = frame;
    out.samples = filter.filtfilt(frame.samples);
    return out;
}

SensorFrame lowpass_filter(const SensorFrame &frame, double cutoff_hz) {
    frame.validate();
    const auto filter = SosFilter::butterworth_lowpass(cutoff_hz, frame.rate);
    SensorFrame out = frame;
    out.samples = filter.filtfilt(frame.samples);
    return out;
}

SensorFrame preprocess(const SensorFrame &frame) {
    frame.validate();
    SensorFrame out = frame;
    if (const auto band = default_band(frame.channel)) {
        // Bands above Nyquist are clipped so down-sampled replays still run.
        const double nyquist = frame.rate / 2.0;
        const double high = band->high_hz < nyquist ? band->high_hz : 0.95 * nyquist;
        if (band->low_hz > 0.0 && band->low_hz < high) {
            out = bandpass_filter(frame, band->low_hz, high);
        } else {
            out = lowpass_filter(frame, high);
        }
    }
    if (frame.channel == Channel::ECG) {
        out = moving_average(out, kDefaultSmoothingWindow);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Smoothing and features

std::vector<double> moving_average(std::span<const double> x, int window) {
    if (window < 1) {
        throw DomainError(fmt::format("moving-average window {} must be >= 1", window));
    }
    const auto w = static_cast<std::size_t>(window);
    if (x.size() < w) {
        throw DegenerateInputError(fmt::format("moving-average window {} exceeds {} samples", window, x.size()));
    }
    std::vector<double> out;
    out.reserve(x.size() - w + 1);
    // Each window summed directly so the result carries no running-sum drift.
    for (std::size_t i = 0; i + w <= x.size(); ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < w; ++k) {
            sum += x[i + k];
        }
        out.push_back(sum / static_cast<double>(w));
    }
    return out;
}

SensorFrame moving_average(const SensorFrame &frame, int window) {
    frame.validate();
    SensorFrame out;
    out.channel = frame.channel;
    out.rate = frame.rate;
    out.samples = moving_average(frame.samples, window);
    out.t0_ms = frame.time_of(static_cast<std::size_t>(window - 1));
    return out;
}

WindowFeatures window_features(std::span<const double> samples) {
    if (samples.size() < 2) {
        throw DegenerateInputError(fmt::format("window features need >= 2 samples, got {}", samples.size()));
    }
    WindowFeatures f;
    const auto n = static_cast<double>(samples.size());
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    f.min = *lo;
    f.max = *hi;
    f.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    // Rounding can push the mean a hair outside [min, max] on constant input.
    f.mean = std::clamp(f.mean, f.min, f.max);
    double ss = 0.0;
    for (double v : samples) {
        ss += (v - f.mean) * (v - f.mean);
    }
    f.std = std::sqrt(ss / n);
    f.end_start_diff = samples.back() - samples.front();
    f.max_min_diff = f.max - f.min;
    return f;
}

DerivativeFeatures derivative_features(std::span<const double> samples, double rate) {
    if (samples.size() < 3) {
        throw DegenerateInputError(fmt::format("derivative features need >= 3 samples, got {}", samples.size()));
    }
    if (!(rate > 0.0)) {
        throw DomainError("sample rate must be positive");
    }
    const auto n = samples.size();
    DerivativeFeatures f;
    f.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : samples) {
        ss += (v - f.mean) * (v - f.mean);
    }
    f.variance = ss / static_cast<double>(n);

    double d1 = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        d1 += (samples[i + 1] - samples[i]) * rate;
    }
    f.d1_mean = d1 / static_cast<double>(n - 1);

    double d2 = 0.0;
    for (std::size_t i = 0; i + 2 < n; ++i) {
        d2 += (samples[i + 2] - 2.0 * samples[i + 1] + samples[i]) * rate * rate;
    }
    f.d2_mean = d2 / static_cast<double>(n - 2);
    return f;
}

EnvSnapshot env_snapshot(const SensorFrame &light, const SensorFrame &temperature, const SensorFrame &humidity,
                         std::size_t window) {
    if (window < 2) {
        throw DomainError("environment window must hold at least two samples");
    }
    auto trailing = [window](const SensorFrame &frame) {
        frame.validate();
        if (frame.samples.size() < window) {
            throw DegenerateInputError(fmt::format("{} frame has {} samples, environment window needs {}",
                                                   to_string(frame.channel), frame.samples.size(), window));
        }
        return std::span<const double>(frame.samples).last(window);
    };
    EnvSnapshot snap;
    snap.light = window_features(trailing(light));
    snap.temperature = window_features(trailing(temperature));
    snap.humidity = window_features(trailing(humidity));
    snap.window_len = window;
    for (const auto *f : {&light, &temperature, &humidity}) {
        snap.t_end_ms = std::max(snap.t_end_ms, f->time_of(f->samples.size() - 1));
    }
    return snap;
}

const std::optional<ChannelFeatures> &PhysioFeatures::get(Channel channel) const {
    switch (channel) {
        case Channel::EMG: return emg;
        case Channel::ECG: return ecg;
        case Channel::EDA: return eda;
        case Channel::EEG: return eeg;
        default: throw DomainError(fmt::format("{} is not a physiological channel", to_string(channel)));
    }
}

std::optional<ChannelFeatures> &PhysioFeatures::get(Channel channel) {
    return const_cast<std::optional<ChannelFeatures> &>(std::as_const(*this).get(channel));
}

ChannelFeatures channel_features(const SensorFrame &frame) {
    const auto clean = preprocess(frame);
    return ChannelFeatures{window_features(clean.samples), derivative_features(clean.samples, clean.rate)};
}

// ---------------------------------------------------------------------------
// Replay files

SensorFrame read_sensor_csv(std::istream &in, Channel channel, double rate, std::string_view source) {
    const auto rows = detail::read_rows(in, ',', {"t_ms", "value"}, source);
    SensorFrame frame;
    frame.channel = channel;
    frame.rate = rate;
    frame.samples.reserve(rows.size());
    for (const auto &row : rows) {
        if (row.fields.size() != 2) {
            throw ParseError(fmt::format("{}:{}: expected 2 fields", source, row.line));
        }
        if (frame.samples.empty()) {
            frame.t0_ms = detail::to_int64(row.fields[0], source, row.line);
        }
        frame.samples.push_back(detail::to_double(row.fields[1], source, row.line));
    }
    frame.validate();
    return frame;
}

SensorFrame load_sensor_csv(const std::string &path, Channel channel, double rate) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(fmt::format("cannot open '{}'", path));
    }
    return read_sensor_csv(in, channel, rate, path);
}

void write_sensor_csv(std::ostream &out, const SensorFrame &frame) {
    out << "t_ms,value\n";
    for (std::size_t i = 0; i < frame.samples.size(); ++i) {
        out << frame.time_of(i) << ',' << fmt::format("{:.9g}", frame.samples[i]) << '\n';
    }
}

}  // namespace drivesafe::sigproc
