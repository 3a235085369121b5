#include "anet/wfdb.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace anet {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

bool is_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;  // blank
}

}  // namespace

HeaderInfo parse_header(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  HeaderInfo h;
  bool have_record_line = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (is_comment(line)) continue;
    auto tok = split_ws(line);
    if (!have_record_line) {
      if (tok.size() < 2)
        throw std::runtime_error("header parse error at line " +
                                 std::to_string(lineno) +
                                 ": record line needs name and signal count");
      h.record_name = tok[0].substr(0, tok[0].find('/'));
      try {
        h.n_signals = std::stoi(tok[1]);
        if (tok.size() >= 3) {
          h.sampling_rate = std::stod(tok[2].substr(0, tok[2].find('/')));
        } else {
          h.sampling_rate = 250.0;  // WFDB default
          h.sampling_rate_defaulted = true;
        }
        if (tok.size() >= 4) h.n_samples = std::stol(tok[3]);
      } catch (const std::exception&) {
        throw std::runtime_error("header parse error at line " +
                                 std::to_string(lineno) + ": bad numeric field");
      }
      have_record_line = true;
      continue;
    }
    if (static_cast<int>(h.signals.size()) >= h.n_signals) break;
    if (tok.size() < 2)
      throw std::runtime_error("header parse error at line " +
                               std::to_string(lineno) +
                               ": signal line needs file and format");
    SignalInfo s;
    s.file_name = tok[0];
    std::string fmt = tok[1];
    // format may carry a sample-skew suffix like 212x1; take leading digits
    size_t pos = 0;
    try {
      s.format = std::stoi(fmt, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error("header parse error at line " +
                               std::to_string(lineno) + ": bad format field '" +
                               fmt + "'");
    }
    if (s.format != 212)
      throw std::runtime_error("unsupported signal format " +
                               std::to_string(s.format) + " at line " +
                               std::to_string(lineno) + " (only 212 is supported)");
    if (tok.size() >= 3) {
      // gain field: gain(baseline)/units
      const std::string& gf = tok[2];
      try {
        size_t p = 0;
        s.gain = std::stod(gf, &p);
        if (s.gain == 0) s.gain = 200.0;  // WFDB convention for unspecified gain
        if (p < gf.size() && gf[p] == '(') {
          size_t close = gf.find(')', p);
          s.baseline = std::stoi(gf.substr(p + 1, close - p - 1));
        }
      } catch (const std::exception&) {
        throw std::runtime_error("header parse error at line " +
                                 std::to_string(lineno) + ": bad gain field '" +
                                 gf + "'");
      }
    }
    // without an explicit baseline, use the ADC zero field when present
    if (tok.size() >= 5 && tok[2].find('(') == std::string::npos) {
      try {
        s.baseline = std::stoi(tok[4]);
      } catch (const std::exception&) {
        // optional field, ignore if not numeric
      }
    }
    if (!tok.empty()) s.description = tok.back();
    h.signals.push_back(std::move(s));
  }
  if (!have_record_line)
    throw std::runtime_error("header parse error: no record line found");
  if (static_cast<int>(h.signals.size()) < h.n_signals)
    throw std::runtime_error("header parse error: expected " +
                             std::to_string(h.n_signals) + " signal lines, got " +
                             std::to_string(h.signals.size()));
  return h;
}

std::vector<int> decode_212(const std::vector<std::uint8_t>& bytes,
                            long n_samples, int n_channels) {
  const long total = n_samples * n_channels;
  const long needed = (total * 3 + 1) / 2;
  if (static_cast<long>(bytes.size()) < needed)
    throw std::runtime_error("format 212: truncated stream, need " +
                             std::to_string(needed) + " bytes, have " +
                             std::to_string(bytes.size()) + " (at byte offset " +
                             std::to_string(bytes.size()) + ")");
  std::vector<int> out;
  out.reserve(total);
  for (long i = 0; i < total; i += 2) {
    const size_t o = static_cast<size_t>(i / 2) * 3;
    int s1 = ((bytes[o + 1] & 0x0F) << 8) | bytes[o];
    if (s1 & 0x800) s1 -= 0x1000;
    out.push_back(s1);
    if (i + 1 < total) {
      int s2 = ((bytes[o + 1] & 0xF0) << 4) | bytes[o + 2];
      if (s2 & 0x800) s2 -= 0x1000;
      out.push_back(s2);
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_212(const std::vector<int>& samples) {
  std::vector<std::uint8_t> out;
  out.reserve((samples.size() * 3 + 1) / 2);
  for (size_t i = 0; i < samples.size(); i += 2) {
    const int s1 = samples[i] & 0xFFF;
    const int s2 = (i + 1 < samples.size() ? samples[i + 1] : 0) & 0xFFF;
    out.push_back(static_cast<std::uint8_t>(s1 & 0xFF));
    out.push_back(static_cast<std::uint8_t>(((s1 >> 8) & 0x0F) |
                                            ((s2 >> 4) & 0xF0)));
    out.push_back(static_cast<std::uint8_t>(s2 & 0xFF));
  }
  return out;
}

std::vector<Annotation> parse_annotations(const std::vector<std::uint8_t>& bytes) {
  std::vector<Annotation> out;
  long t = 0;
  size_t i = 0;
  while (i + 1 < bytes.size()) {
    const int low = bytes[i];
    const int high = bytes[i + 1];
    i += 2;
    const int code = high >> 2;
    const long interval = ((high & 0x03) << 8) | low;
    if (code == 0 && interval == 0) break;  // EOF
    if (code == 59) {                       // SKIP: 4-byte interval, high word first
      if (i + 3 >= bytes.size())
        throw std::runtime_error("annotation parse: truncated SKIP at byte " +
                                 std::to_string(i));
      const long hi = bytes[i] | (bytes[i + 1] << 8);
      const long lo = bytes[i + 2] | (bytes[i + 3] << 8);
      i += 4;
      t += (hi << 16) | lo;
      continue;
    }
    if (code == 63) {  // AUX: interval = byte count, padded to even
      i += interval + (interval & 1);
      continue;
    }
    if (code == 60 || code == 61 || code == 62) continue;  // NUM / SUB / CHN
    t += interval;
    out.push_back({t, code});
  }
  for (size_t k = 1; k < out.size(); ++k)
    if (out[k].sample <= out[k - 1].sample)
      throw std::runtime_error("annotation parse: sample indices not increasing at #" +
                               std::to_string(k));
  return out;
}

std::vector<std::uint8_t> encode_annotations(const std::vector<Annotation>& anns) {
  std::vector<std::uint8_t> out;
  long t = 0;
  for (const auto& a : anns) {
    long delta = a.sample - t;
    if (delta < 0) throw std::invalid_argument("encode_annotations: times must increase");
    if (delta > 1023) {
      out.push_back(0);
      out.push_back(59 << 2);  // SKIP, zero interval field
      out.push_back(static_cast<std::uint8_t>((delta >> 16) & 0xFF));
      out.push_back(static_cast<std::uint8_t>((delta >> 24) & 0xFF));
      out.push_back(static_cast<std::uint8_t>(delta & 0xFF));
      out.push_back(static_cast<std::uint8_t>((delta >> 8) & 0xFF));
      delta = 0;
    }
    out.push_back(static_cast<std::uint8_t>(delta & 0xFF));
    out.push_back(static_cast<std::uint8_t>(((delta >> 8) & 0x03) | (a.code << 2)));
    t = a.sample;
  }
  out.push_back(0);
  out.push_back(0);  // EOF
  return out;
}

Record read_record(const std::filesystem::path& dir, const std::string& name) {
  const auto hea = dir / (name + ".hea");
  std::ifstream hf(hea);
  if (!hf) throw std::runtime_error("missing header file " + hea.string());
  std::stringstream ss;
  ss << hf.rdbuf();
  Record rec;
  rec.header = parse_header(ss.str());

  const auto dat = dir / rec.header.signals.at(0).file_name;
  std::ifstream df(dat, std::ios::binary);
  if (!df) throw std::runtime_error("missing signal file " + dat.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(df)),
                                  std::istreambuf_iterator<char>());
  auto flat = decode_212(bytes, rec.header.n_samples, rec.header.n_signals);
  rec.samples.assign(rec.header.n_signals, {});
  for (auto& ch : rec.samples) ch.reserve(rec.header.n_samples);
  for (long i = 0; i < static_cast<long>(flat.size()); ++i)
    rec.samples[i % rec.header.n_signals].push_back(flat[i]);

  const auto atr = dir / (name + ".atr");
  std::ifstream af(atr, std::ios::binary);
  if (!af) throw std::runtime_error("missing annotation file " + atr.string());
  std::vector<std::uint8_t> abytes((std::istreambuf_iterator<char>(af)),
                                   std::istreambuf_iterator<char>());
  rec.annotations = parse_annotations(abytes);
  for (const auto& a : rec.annotations)
    if (a.sample >= rec.header.n_samples)
      throw std::runtime_error("annotation at sample " + std::to_string(a.sample) +
                               " beyond record length");
  return rec;
}

}  // namespace anet
