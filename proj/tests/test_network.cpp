#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "etncs/network.hpp"

using namespace etncs;

namespace {

ChannelConfig affine_channel(double T0, double d) {
    ChannelConfig c;
    c.delay = DelayProfile::affine(T0, d);
    return c;
}

}  // namespace

TEST_CASE("affine delay gives the expected arrival time") {
    Channel ch(affine_channel(0.5, 0.3), 1);
    const auto rec = ch.send(1.0, {3.0});
    CHECK_FALSE(rec.dropped);
    CHECK(rec.arrival_time == Catch::Approx(1.8).epsilon(1e-15));
}

TEST_CASE("zero constant delay delivers at the send time") {
    ChannelConfig c;
    c.delay = DelayProfile::constant(0.0);
    Channel ch(c, 1);
    const auto rec = ch.send(2.5, {1.0});
    CHECK(rec.arrival_time == 2.5);
    CHECK(ch.poll(2.5) == Vec{1.0});
}

TEST_CASE("alternating drop pattern drops the first send and delivers the second") {
    ChannelConfig c = affine_channel(0.0, 0.0);
    c.dropout.kind = DropoutModel::Kind::pattern;
    c.dropout.pattern = DropoutModel::parse_pattern("DK");
    Channel ch(c, 1);
    CHECK(ch.send(0.0, {1.0}).dropped);
    CHECK_FALSE(ch.send(0.1, {2.0}).dropped);
    CHECK(ch.send(0.2, {3.0}).dropped);
}

TEST_CASE("reliable sends bypass the dropout stream") {
    ChannelConfig c = affine_channel(0.0, 0.0);
    c.dropout.kind = DropoutModel::Kind::pattern;
    c.dropout.pattern = {true, false};
    Channel ch(c, 1);
    CHECK_FALSE(ch.send_reliable(0.0, {1.0}).dropped);
    CHECK(ch.send(0.1, {2.0}).dropped);
}

TEST_CASE("poll before the first arrival returns the initial hold") {
    ChannelConfig c = affine_channel(0.5, 0.0);
    c.initial_hold = {4.0, -1.0};
    Channel ch(c, 2);
    ch.send(0.0, {1.0, 1.0});
    CHECK(ch.poll(0.49) == Vec{4.0, -1.0});
    CHECK(ch.poll(0.5) == Vec{1.0, 1.0});
}

TEST_CASE("poll between two arrivals returns only the first payload") {
    ChannelConfig c;
    c.delay.form = DelayProfile::Form::table;
    c.delay.rate_bound = 0.9;
    c.delay.table = {{0.0, 0.8}, {1.0, 0.8}};
    Channel ch(c, 1);
    ch.send(1.0, {1.0});   // arrives 1.8
    ch.send(1.3, {2.0});   // arrives 2.1
    CHECK(ch.poll(2.0) == Vec{1.0});
    CHECK(ch.poll(2.1) == Vec{2.0});
}

TEST_CASE("rate bound check on constant, affine and jumping profiles") {
    std::vector<double> g;
    for (int i = 0; i <= 200; ++i) g.push_back(i * 0.05);
    CHECK(rate_bound_check(DelayProfile::constant(0.6), g));
    CHECK(rate_bound_check(DelayProfile::affine(0.5, 0.3), g));
    DelayProfile jump;
    jump.form = DelayProfile::Form::table;
    jump.rate_bound = 0.3;
    jump.table = {{0.0, 0.5}, {1.0, 0.5}, {1.1, 1.0}, {5.0, 1.0}};
    CHECK_FALSE(rate_bound_check(jump, g));
}

TEST_CASE("channel keeps send order and causality under random traffic") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> gap(0.0, 0.05);
    std::uniform_real_distribution<double> t0(0.0, 2.0);
    for (double d : {0.0, 0.3, 0.9}) {
        for (int seq = 0; seq < 300; ++seq) {
            ChannelConfig c = affine_channel(t0(rng), d);
            c.dropout.kind = DropoutModel::Kind::bernoulli;
            c.dropout.p = 0.3;
            c.dropout.seed = static_cast<std::uint64_t>(seq);
            Channel ch(c, 1);
            double t = 0.0;
            double last_arrival = -1.0;
            for (int k = 0; k < 40; ++k) {
                t += gap(rng);
                const auto rec = ch.send(t, {static_cast<double>(k)});
                if (rec.dropped) continue;
                REQUIRE(rec.arrival_time >= rec.send_time);
                REQUIRE(rec.arrival_time >= last_arrival);
                last_arrival = rec.arrival_time;
            }
            // Held values only move forward through the sent sequence.
            double seen = -1.0;
            for (double q = 0.0; q < t + 10.0; q += 0.01) {
                const double v = ch.poll(q)[0];
                if (ch.hold().last_update > -1.0) REQUIRE(v >= seen);
                seen = std::max(seen, v);
            }
        }
    }
}

TEST_CASE("bernoulli dropouts are reproducible and respect the run cap") {
    ChannelConfig c = affine_channel(0.1, 0.0);
    c.dropout.kind = DropoutModel::Kind::bernoulli;
    c.dropout.p = 0.7;
    c.dropout.seed = 99;
    c.dropout.max_consecutive = 2;
    Channel a(c, 1), b(c, 1);
    for (int k = 0; k < 5000; ++k) {
        const auto ra = a.send(k * 0.01, {1.0});
        const auto rb = b.send(k * 0.01, {1.0});
        REQUIRE(ra.dropped == rb.dropped);
        REQUIRE(ra.arrival_time == rb.arrival_time);
    }
    CHECK(a.max_consecutive_drops() == 2);
}

TEST_CASE("channel rejects sends going back in time and bad configs") {
    Channel ch(affine_channel(0.0, 0.0), 1);
    ch.send(1.0, {0.0});
    CHECK_THROWS(ch.send(0.5, {0.0}));
    CHECK_THROWS(Channel(affine_channel(0.0, 1.0), 1));
    CHECK_THROWS(ch.send(2.0, {0.0, 1.0}));
}
