pub mod dynamics;
pub mod franks;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod manifolds;
pub mod oracle;
pub mod orbits;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bodies.md")]
    mod bodies {}
    #[doc = include_str!("../../../book/src/tangent-maps.md")]
    mod tangent_maps {}
    #[doc = include_str!("../../../book/src/periodic-orbits.md")]
    mod periodic_orbits {}
    #[doc = include_str!("../../../book/src/franks.md")]
    mod franks {}
    #[doc = include_str!("../../../book/src/manifolds.md")]
    mod manifolds {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    mod entropy {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
