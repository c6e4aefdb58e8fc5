use crate::config::SamplerSpec;

/// Annealing temperatures: log-linear cooling from `t1` to 1 over the first
/// `anneal_len` iterations, then 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSchedule {
    pub temps: Vec<f64>,
    pub t1: f64,
    pub anneal_len: usize,
}

pub fn temperature_schedule(spec: &SamplerSpec) -> TemperatureSchedule {
    let n = spec.n_iter;
    let anneal_len = spec.anneal_len().min(n);
    let log_t1 = spec.t1.ln();
    let temps = (0..n)
        .map(|i| {
            if i >= anneal_len {
                1.0
            } else if i == 0 {
                spec.t1
            } else {
                let frac = i as f64 / (anneal_len - 1) as f64;
                (log_t1 * (1.0 - frac)).exp()
            }
        })
        .collect();
    TemperatureSchedule {
        temps,
        t1: spec.t1,
        anneal_len,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_iteration_schedule() {
        let s = temperature_schedule(&SamplerSpec::with_iters(10, 0));
        assert_eq!(s.anneal_len, 9);
        assert_eq!(s.temps[0], 5.0);
        assert_eq!(s.temps[8], 1.0);
        assert_eq!(s.temps[9], 1.0);
        let expected = (5f64.ln() * (1.0 - 4.0 / 8.0)).exp();
        assert!((s.temps[4] - expected).abs() < 1e-15);
        assert!((s.temps[4] - 2.2361).abs() < 1e-4);
        assert!(s.temps.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn unit_start_is_flat() {
        let mut spec = SamplerSpec::with_iters(50, 0);
        spec.t1 = 1.0;
        assert!(temperature_schedule(&spec).temps.iter().all(|&t| t == 1.0));
    }

    #[test]
    fn log_linear_segment() {
        let s = temperature_schedule(&SamplerSpec::with_iters(1000, 0));
        let logs: Vec<f64> = s.temps[..s.anneal_len].iter().map(|t| t.ln()).collect();
        let step = logs[1] - logs[0];
        assert!(logs.windows(2).all(|w| ((w[1] - w[0]) - step).abs() < 1e-12));
        assert!(s.temps[s.anneal_len..].iter().all(|&t| t == 1.0));
    }
}
