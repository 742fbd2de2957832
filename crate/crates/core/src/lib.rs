pub mod compactify;
pub mod completion;
pub mod expr;
pub mod filters;
mod par;
pub mod space;
pub mod specfile;
pub mod sweep;
pub mod tangent;
pub mod uniform;
