pub mod bhk;
pub mod cone;
pub mod hessian;
pub mod kvn;
pub mod ma;
pub mod ot;

pub fn is_known_check(name: &str) -> bool {
    [hessian::CHECKS, cone::CHECKS, ma::CHECKS, ot::CHECKS, bhk::CHECKS, kvn::CHECKS]
        .iter()
        .any(|names| names.contains(&name))
}
