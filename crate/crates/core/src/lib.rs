//! Backward reachability of grid feedback motion plans for vehicles with a
//! minimum turning radius.
//!
//! The workspace is split into square cells of size `d < r`, each carrying a
//! commanded heading. Cell-level reachable heading sets ([`cellular_backward`],
//! [`forward_reach`]) feed a bitmap fixed point over interior borders
//! ([`propagation`]) that answers membership queries in constant time.

pub mod geometry;
pub mod kinematics;
pub mod plan;
pub mod cellular_backward;
pub mod forward_reach;
pub mod propagation;
pub mod cli_io;
