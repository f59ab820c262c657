#include "mfm/net.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mfm/error.hpp"
#include "mfm/parallel.hpp"

namespace mfm {

void validate_spec(const NetSpec& s) {
    if (s.dim < 1) throw shape_error("net spec: dim must be >= 1");
    if (s.hidden.empty()) throw shape_error("net spec: at least one hidden layer required");
    for (int h : s.hidden)
        if (h < 1) throw shape_error("net spec: hidden widths must be >= 1");
    if (s.embedding == TimeEmbedding::Sinusoidal && s.n_freq < 1)
        throw shape_error("net spec: n_freq must be >= 1");
}

ParamLayout layout_of(const NetSpec& s) {
    ParamLayout l;
    int prev = s.in_features();
    int off = 0;
    for (int li = 0; li < s.layers(); ++li) {
        const int out = li < static_cast<int>(s.hidden.size()) ? s.hidden[li] : s.dim;
        l.w_off.push_back(off);
        off += prev * out;
        l.b_off.push_back(off);
        off += out;
        l.in_dim.push_back(prev);
        l.out_dim.push_back(out);
        prev = out;
    }
    l.total = off;
    return l;
}

int param_count(const NetSpec& s) { return layout_of(s).total; }

int default_param_budget(int dim) {
    if (dim <= 2) return 50000;
    if (dim >= 32) return 800000;
    return 200000;
}

std::vector<int> hidden_for_budget(const NetSpec& base, int budget) {
    // two equal hidden layers: params(w) = (in+1)w + (w+1)w + (w+1)out
    const int in = base.in_features();
    const int out = base.dim;
    const double b = in + out + 2;
    const double disc = b * b + 4.0 * (budget - out);
    int w = static_cast<int>((-b + std::sqrt(disc)) / 2.0);
    w -= w % 8;
    if (w < 8) w = 8;
    return {w, w};
}

NetSpec default_field_spec(int dim) {
    NetSpec s;
    s.dim = dim;
    s.embedding = dim <= 2 ? TimeEmbedding::ConcatScalar : TimeEmbedding::Sinusoidal;
    s.hidden = hidden_for_budget(s, default_param_budget(dim));
    return s;
}

Mlp init_model(const NetSpec& s, Rng& rng) {
    validate_spec(s);
    const ParamLayout l = layout_of(s);
    Mlp m;
    m.spec = s;
    m.params.assign(l.total, 0.0);
    for (int li = 0; li < s.layers(); ++li) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(l.in_dim[li]));
        double* w = m.params.data() + l.w_off[li];
        const int n = l.in_dim[li] * l.out_dim[li];
        for (int i = 0; i < n; ++i) w[i] = rng.uniform(-scale, scale);
        // biases stay zero
    }
    return m;
}

void embed_time(const NetSpec& s, double t, std::span<double> out) {
    switch (s.embedding) {
        case TimeEmbedding::None:
            return;
        case TimeEmbedding::ConcatScalar:
            out[0] = t;
            return;
        case TimeEmbedding::Sinusoidal: {
            constexpr double pi = 3.14159265358979323846;
            double freq = 1.0;
            for (int j = 0; j < s.n_freq; ++j) {
                out[2 * j] = std::sin(pi * freq * t);
                out[2 * j + 1] = std::cos(pi * freq * t);
                freq *= 2.0;
            }
            return;
        }
    }
}

namespace {

double swish(double v) { return v / (1.0 + std::exp(-v)); }
double swish_deriv(double v) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    return s * (1.0 + v * (1.0 - s));
}

}  // namespace

void forward(const Mlp& m, std::span<const double> x, double t, std::span<double> out) {
    const NetSpec& s = m.spec;
    if (static_cast<int>(x.size()) != s.dim) throw shape_error("forward: input dim mismatch");
    if (static_cast<int>(out.size()) != s.dim) throw shape_error("forward: output dim mismatch");
    const ParamLayout l = layout_of(s);

    std::vector<double> cur(s.in_features());
    std::copy(x.begin(), x.end(), cur.begin());
    embed_time(s, t, std::span<double>(cur).subspan(s.dim));

    std::vector<double> nxt;
    for (int li = 0; li < s.layers(); ++li) {
        const int in = l.in_dim[li], on = l.out_dim[li];
        nxt.assign(on, 0.0);
        const double* w = m.params.data() + l.w_off[li];
        const double* b = m.params.data() + l.b_off[li];
        for (int o = 0; o < on; ++o) {
            double acc = b[o];
            const double* wo = w + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += wo[i] * cur[i];
            nxt[o] = li + 1 < s.layers() ? swish(acc) : acc;
        }
        cur.swap(nxt);
    }
    for (int j = 0; j < s.dim; ++j) {
        if (!std::isfinite(cur[j])) throw numerical_error("forward: non-finite network output");
        out[j] = cur[j];
    }
}

Batch forward_batch(const Mlp& m, const Batch& xs, const double* ts) {
    if (m.spec.embedding != TimeEmbedding::None && ts == nullptr)
        throw usage_error("forward_batch: time values required for a time-conditioned net");
    Batch out(xs.k, m.spec.dim);
    ParallelGuard guard;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < xs.k; ++i) {
        guard.run([&, i] { forward(m, xs.row(i), ts ? ts[i] : 0.0, out.row(i)); });
    }
    guard.rethrow_if_any();
    return out;
}

double divergence(const Mlp& m, std::span<const double> x, double t) {
    const NetSpec& s = m.spec;
    const ParamLayout l = layout_of(s);
    const int in0 = s.in_features();

    std::vector<double> base(in0);
    std::copy(x.begin(), x.end(), base.begin());
    embed_time(s, t, std::span<double>(base).subspan(s.dim));

    double trace = 0.0;
    std::vector<double> val, dot, val_n, dot_n;
    for (int coord = 0; coord < s.dim; ++coord) {
        val.assign(base.begin(), base.end());
        dot.assign(in0, 0.0);
        dot[coord] = 1.0;  // tangent e_coord; time features carry no tangent
        for (int li = 0; li < s.layers(); ++li) {
            const int in = l.in_dim[li], on = l.out_dim[li];
            val_n.assign(on, 0.0);
            dot_n.assign(on, 0.0);
            const double* w = m.params.data() + l.w_off[li];
            const double* b = m.params.data() + l.b_off[li];
            for (int o = 0; o < on; ++o) {
                const double* wo = w + static_cast<size_t>(o) * in;
                double acc = b[o], dacc = 0.0;
                for (int i = 0; i < in; ++i) {
                    acc += wo[i] * val[i];
                    dacc += wo[i] * dot[i];
                }
                if (li + 1 < s.layers()) {
                    val_n[o] = swish(acc);
                    dot_n[o] = swish_deriv(acc) * dacc;
                } else {
                    val_n[o] = acc;
                    dot_n[o] = dacc;
                }
            }
            val.swap(val_n);
            dot.swap(dot_n);
        }
        trace += dot[coord];
    }
    if (!std::isfinite(trace)) throw numerical_error("divergence: non-finite value");
    return trace;
}

int tape_forward(ad::Tape& tape, const Mlp& m, int features_buf) {
    const ParamLayout l = layout_of(m.spec);
    int cur = features_buf;
    for (int li = 0; li < m.spec.layers(); ++li) {
        cur = tape.affine(cur, l.w_off[li], l.b_off[li], l.in_dim[li], l.out_dim[li]);
        if (li + 1 < m.spec.layers()) cur = tape.swish(cur);
    }
    return cur;
}

AdamState make_adam(size_t n_params, double lr) {
    AdamState st;
    st.lr = lr;
    st.m.assign(n_params, 0.0);
    st.v.assign(n_params, 0.0);
    return st;
}

void adam_step(Mlp& model, AdamState& st, std::span<const double> grad) {
    const size_t n = model.params.size();
    if (st.m.size() != n || grad.size() != n) throw shape_error("adam_step: size mismatch");
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
#pragma omp parallel for schedule(static) if (n > 4095)
    for (size_t i = 0; i < n; ++i) {
        const double g = grad[i] + st.weight_decay * model.params[i];
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        model.params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

namespace {

const char* embedding_name(TimeEmbedding e) {
    switch (e) {
        case TimeEmbedding::None: return "none";
        case TimeEmbedding::ConcatScalar: return "concat";
        case TimeEmbedding::Sinusoidal: return "sinusoidal";
    }
    return "?";
}

TimeEmbedding embedding_from_name(const std::string& n) {
    if (n == "none") return TimeEmbedding::None;
    if (n == "concat") return TimeEmbedding::ConcatScalar;
    if (n == "sinusoidal") return TimeEmbedding::Sinusoidal;
    throw io_error("checkpoint: unknown time embedding '" + n + "'");
}

void write_vec(std::FILE* f, const char* name, const std::vector<double>& v) {
    std::fprintf(f, "%s %zu\n", name, v.size());
    for (double x : v) std::fprintf(f, "%a\n", x);
}

std::vector<double> read_vec(std::istream& in, const std::string& name, size_t expect) {
    std::string tag;
    size_t n = 0;
    if (!(in >> tag >> n) || tag != name)
        throw io_error("checkpoint: expected '" + name + "' block");
    if (expect != 0 && n != expect) throw shape_error("checkpoint: '" + name + "' size mismatch");
    std::vector<double> v(n);
    std::string tok;
    for (size_t i = 0; i < n; ++i) {
        if (!(in >> tok)) throw io_error("checkpoint: truncated '" + name + "' block");
        v[i] = std::strtod(tok.c_str(), nullptr);
    }
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Mlp& m, const AdamState* st) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw io_error("cannot open '" + path + "' for writing");
    std::fprintf(f, "mfm-checkpoint v1\n");
    std::fprintf(f, "dim %d\n", m.spec.dim);
    std::fprintf(f, "hidden");
    for (int h : m.spec.hidden) std::fprintf(f, " %d", h);
    std::fprintf(f, "\n");
    std::fprintf(f, "embedding %s\n", embedding_name(m.spec.embedding));
    std::fprintf(f, "n_freq %d\n", m.spec.n_freq);
    write_vec(f, "params", m.params);
    if (st) {
        std::fprintf(f, "adam %ld %.17g %.17g %.17g %.17g %.17g\n", st->step, st->lr, st->beta1,
                     st->beta2, st->eps, st->weight_decay);
        write_vec(f, "adam_m", st->m);
        write_vec(f, "adam_v", st->v);
    }
    if (std::fclose(f) != 0) throw io_error("write failed for '" + path + "'");
}

Mlp load_checkpoint(const std::string& path, AdamState* st, const NetSpec* expected) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line) || line != "mfm-checkpoint v1")
        throw io_error("checkpoint: bad magic in '" + path + "'");

    Mlp m;
    std::string tag;
    if (!(in >> tag >> m.spec.dim) || tag != "dim") throw io_error("checkpoint: missing dim");
    if (!(in >> tag) || tag != "hidden") throw io_error("checkpoint: missing hidden");
    {
        std::getline(in, line);
        std::istringstream hs(line);
        int h;
        while (hs >> h) m.spec.hidden.push_back(h);
    }
    std::string emb;
    if (!(in >> tag >> emb) || tag != "embedding") throw io_error("checkpoint: missing embedding");
    m.spec.embedding = embedding_from_name(emb);
    if (!(in >> tag >> m.spec.n_freq) || tag != "n_freq") throw io_error("checkpoint: missing n_freq");
    validate_spec(m.spec);

    if (expected) {
        if (expected->dim != m.spec.dim || expected->hidden != m.spec.hidden ||
            expected->embedding != m.spec.embedding || expected->n_freq != m.spec.n_freq)
            throw shape_error("checkpoint: network spec does not match expectation");
    }

    m.params = read_vec(in, "params", static_cast<size_t>(param_count(m.spec)));

    if (st) {
        if (!(in >> tag) || tag != "adam")
            throw io_error("checkpoint: adam state requested but absent");
        if (!(in >> st->step >> st->lr >> st->beta1 >> st->beta2 >> st->eps >> st->weight_decay))
            throw io_error("checkpoint: malformed adam header");
        st->m = read_vec(in, "adam_m", m.params.size());
        st->v = read_vec(in, "adam_v", m.params.size());
    }
    return m;
}

}  // namespace mfm
