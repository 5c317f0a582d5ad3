#include "doctest.h"

#include <set>
#include <stdexcept>

#include "meshsim/crypto/blom.hpp"
#include "meshsim/crypto/hash.hpp"
#include "meshsim/crypto/hash_chain.hpp"
#include "meshsim/crypto/mac.hpp"

using namespace meshsim;
using namespace meshsim::crypto;

namespace {

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST_CASE("sha256 of empty input matches the published digest") {
    const Hasher h;
    CHECK(h(std::span<const std::uint8_t>{}).hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const Hasher h8(8);
    CHECK(h8(std::span<const std::uint8_t>{}).hex() == "e3b0c44298fc1c14");
}

TEST_CASE("saodv chain layout") {
    const Hasher h(8);
    Rng rng(1);
    const auto chain = saodv_chain_generate(h, rng, 3);
    CHECK(chain.max_hops() == 3);
    CHECK(chain.anchor() == h(h(h(chain.seed()))));
    CHECK(hca_for_hopcount(chain, 0) == chain.seed());
    CHECK(hca_for_hopcount(chain, 3) == chain.anchor());
    CHECK(hca_for_hopcount(chain, 1) == h(chain.seed()));
    CHECK_THROWS_AS(hca_for_hopcount(chain, 4), std::out_of_range);
    CHECK_THROWS_AS(saodv_chain_generate(h, rng, 0), std::invalid_argument);

    Rng again(1);
    CHECK(saodv_chain_generate(h, again, 3).anchor() == chain.anchor());
}

TEST_CASE("hca verification accepts authentic pairs and rejects decrements") {
    const Hasher h(8);
    Rng rng(7);
    const auto chain = saodv_chain_generate(h, rng, 5);
    Digest hca = chain.seed();
    for (int hc = 0; hc <= 5; ++hc) {
        CHECK(hca_verify(h, chain.anchor(), 5, hc, hca));
        for (int lower = 0; lower < hc; ++lower) CHECK_FALSE(hca_verify(h, chain.anchor(), 5, lower, hca));
        if (hc < 5) hca = hca_advance(h, hca);
    }
    CHECK_FALSE(hca_verify(h, chain.anchor(), 5, 5, hca_advance(h, chain.anchor())));
    CHECK_FALSE(hca_verify(h, chain.anchor(), 5, 6, chain.anchor()));
    CHECK_FALSE(hca_verify(h, chain.anchor(), 5, -1, chain.anchor()));
}

TEST_CASE("sead index and verification") {
    const Hasher h(8);
    Rng rng(3);
    const SeadChain chain(h, h.random(rng), 12, 4);
    CHECK(chain.index(1, 2) == 10);
    CHECK(chain.index(2, 0) < chain.index(1, 0));
    CHECK(chain.index(1, 1) < chain.index(1, 2));
    CHECK_THROWS_AS(chain.index(1, 4), std::out_of_range);
    CHECK_THROWS_AS(chain.index(4, 0), std::out_of_range);
    CHECK(chain.at(5) == h(chain.at(4)));

    const SeadValue known{chain.element(1, 2), chain.index(1, 2)};
    CHECK(sead_verify(h, known, known));
    CHECK(sead_verify(h, known, {chain.element(1, 1), chain.index(1, 1)}));
    CHECK_FALSE(sead_verify(h, known, {chain.element(1, 3), chain.index(1, 3)}));
    // A shorter metric needs an earlier element, which a holder of h_10 cannot derive.
    CHECK_FALSE(sead_verify(h, known, {chain.element(1, 2), chain.index(1, 1)}));
    CHECK_FALSE(sead_verify(h, known, {h(chain.element(1, 2)), chain.index(1, 1)}));
}

TEST_CASE("blom worked example over GF(7)") {
    const BlomPublic pub{7, 1, 3, 3};
    CHECK(pub.column(1) == std::vector<std::uint64_t>{1, 3});
    CHECK(pub.column(2) == std::vector<std::uint64_t>{1, 2});
    CHECK(pub.column(3) == std::vector<std::uint64_t>{1, 6});
    const SymmetricMatrix s{2, {1, 2, 2, 3}};
    const auto setup = blom_setup_with_matrix(pub, s);
    CHECK(setup.rows[0].row == std::vector<std::uint64_t>{0, 4});
    CHECK(setup.rows[1].row == std::vector<std::uint64_t>{5, 1});
    CHECK(setup.rows[2].row == std::vector<std::uint64_t>{6, 6});
    CHECK(blom_pairwise_key(setup.rows[0].row, pub.column(2), 7) == 1);
    CHECK(blom_pairwise_key(setup.rows[1].row, pub.column(1), 7) == 1);
}

TEST_CASE("blom identity secret gives a symmetric gram matrix") {
    const BlomPublic pub{1009, 2, smallest_primitive_element(1009), 6};
    const auto setup = blom_setup_with_matrix(pub, SymmetricMatrix{3, {1, 0, 0, 0, 1, 0, 0, 0, 1}});
    for (int i = 1; i <= 6; ++i) {
        for (int j = 1; j <= 6; ++j) {
            CHECK(blom_pairwise_key(setup.rows[static_cast<std::size_t>(i - 1)].row, pub.column(j), 1009) ==
                  blom_pairwise_key(setup.rows[static_cast<std::size_t>(j - 1)].row, pub.column(i), 1009));
        }
    }
}

TEST_CASE("blom validation") {
    Rng rng(5);
    CHECK_THROWS_WITH(blom_setup(rng, 5, 2, 15), doctest::Contains("non-prime modulus"));
    CHECK_THROWS(blom_setup(rng, 20, 2, 19));
    CHECK_THROWS(blom_setup(rng, 5, 5, 1009));
    CHECK_NOTHROW(blom_setup(rng, 20, 18, 1009));
    CHECK(is_prime(1009));
    CHECK_FALSE(is_prime(1011));
    CHECK(smallest_primitive_element(7) == 3);
    CHECK(is_primitive_element(3, 7));
    CHECK_FALSE(is_primitive_element(2, 7));
    CHECK_THROWS(blom_pairwise_key(std::vector<std::uint64_t>{1, 2}, std::vector<std::uint64_t>{1}, 7));
}

TEST_CASE("blom random setups are symmetric") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto setup = blom_setup(rng, 12, 3, 1009);
        for (int i = 1; i <= 12; ++i) {
            for (int j = i + 1; j <= 12; ++j) {
                REQUIRE(blom_pairwise_key(setup.rows[static_cast<std::size_t>(i - 1)].row, setup.pub.column(j), 1009) ==
                        blom_pairwise_key(setup.rows[static_cast<std::size_t>(j - 1)].row, setup.pub.column(i), 1009));
            }
        }
    }
}

TEST_CASE("mac round trip, bit flips and wrong keys") {
    const Bytes key = bytes_of("group-key");
    const Bytes msg = bytes_of("rreq 1 2 3 4");
    const auto tag = mac_compute(key, msg);
    CHECK(tag.size == kDefaultTagBytes);
    CHECK(mac_verify(key, msg, tag));
    CHECK(mac_compute(key, msg) == tag);

    Rng rng(9);
    int accepted = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        Bytes flipped = msg;
        const auto bit = rng.uniform_int(0, flipped.size() * 8 - 1);
        flipped[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        accepted += mac_verify(key, flipped, tag);
        Bytes other = key;
        other[rng.uniform_int(0, other.size() - 1)] ^= 0x01;
        accepted += mac_verify(other, msg, tag);
    }
    CHECK(accepted == 0);
}

TEST_CASE("keystream cipher is an involution") {
    const Bytes key = key_from_field_element(0x0102030405060708ULL);
    CHECK(key == Bytes{1, 2, 3, 4, 5, 6, 7, 8});
    Bytes data(70);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::uint8_t>(i);
    const auto enc = keystream_xor(key, 42, data);
    CHECK(enc != data);
    CHECK(keystream_xor(key, 42, enc) == data);
    CHECK(keystream_xor(key, 43, data) != enc);
}
