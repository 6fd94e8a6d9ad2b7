//! Smooth families of primitives for exact differential forms.
//!
//! Expressions ([`expr`]) and forms ([`exterior`]) are symbolic; a good cover
//! with charts and a partition of unity ([`cech`]) turns local homotopy
//! primitives into global ones ([`glue`]). [`foliation`] does the same along
//! the fibers of a product bundle, and [`scenario`] drives everything from
//! JSON files.

// `!(a <= b)` is used throughout so that NaN fails a comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::type_complexity, clippy::too_many_arguments)]

pub mod cech;
pub mod expr;
pub mod exterior;
pub mod fixtures;
pub mod foliation;
pub mod glue;
pub mod scenario;
pub mod stats;
