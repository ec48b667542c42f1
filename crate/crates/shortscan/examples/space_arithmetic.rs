//! Exact token-space arithmetic: cardinalities, families, bits of search.
//!
//! ```bash
//! cargo run --example space_arithmetic
//! ```

use num_bigint::BigUint;
use shortscan::numeric::group_thousands;
use shortscan::space::{SpaceFamily, TokenSpace};

fn main() {
    println!("single spaces over the 62-character alphabet");
    println!("--------------------------------------------");
    for length in [4, 5, 6, 7, 10] {
        let space = TokenSpace::base62(length);
        println!(
            "  length {:>2}: {:>26} tokens  ({}, {:.2} bits of search)",
            length,
            group_thousands(&space.cardinality().to_string()),
            space.cardinality_display(),
            space.bits_of_search()
        );
    }

    // A pinned leading character removes one position of search: the
    // 7-character space with a fixed '1' is exactly the 6-character space.
    let pinned = TokenSpace::base62_prefixed(7, '1');
    println!(
        "\n7-char tokens with a pinned leading '1': {} tokens (= 62^6)",
        group_thousands(&pinned.cardinality().to_string())
    );
    assert_eq!(pinned.cardinality(), TokenSpace::base62(6).cardinality());

    // The classic shortener family serves lengths 4..7 side by side.
    let family = SpaceFamily::bitly_family();
    println!(
        "\nfamily 62^4 + 62^5 + 2*62^6 = {} tokens ({}, {:.2} bits)",
        group_thousands(&family.cardinality().to_string()),
        family.cardinality_display(),
        family.bits_of_search()
    );

    // The codec is a bijection: index order is lexicographic token order.
    let six = TokenSpace::base62(6);
    println!("\ncodec samples on the 6-character space");
    for index in [0u128, 61, 62, 3843, 56_800_235_583] {
        let token = six.encode_u128(index).unwrap();
        let back = six.decode(&token).unwrap();
        assert_eq!(back, BigUint::from(index));
        println!("  index {index:>14} -> {token}");
    }
}
