//! Finite laboratory for a side-condition forcing construction: Cantor normal
//! form ordinals, finite trees with height maps, the tree forcing and its
//! side-condition extension, and their quotients.

pub mod ccc;
pub mod gen;
pub mod ordinal;
pub mod tree;
pub mod pstar;
pub mod quotient;
pub mod schema;
pub mod side;
pub mod universe;
