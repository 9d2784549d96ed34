//! Run metrics: average residual bandwidth, average loss, and bandwidth
//! variation between successive transmissions.
//!
//! Averages run over every epoch in the window. An epoch with ERAB >= 0
//! contributes its ERAB to the RAB sum and nothing to the DLR sum; an epoch
//! with ERAB < 0 the reverse.

use crate::controller::EpochRecord;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesPoint {
    pub epoch: usize,
    pub rate: f64,
    pub total: f64,
    pub erab: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub epochs: usize,
    pub avg_rab: f64,
    pub avg_dlr: f64,
    pub count_rab: usize,
    pub count_dlr: usize,
    pub mean_erab: f64,
    /// Mean of `| |x_{t+1}| - |x_t| |` over consecutive epochs.
    pub avg_bw_variation: f64,
    /// Wall clock of the final epoch's allocation search, ms.
    pub final_search_time_ms: f64,
    pub series: Vec<SeriesPoint>,
}

impl MetricsReport {
    pub fn from_series(series: Vec<SeriesPoint>) -> Self {
        let n = series.len();
        let (mut rab, mut dlr, mut sum) = (0.0, 0.0, 0.0);
        let (mut count_rab, mut count_dlr) = (0, 0);
        for p in &series {
            sum += p.erab;
            if p.erab >= 0.0 {
                rab += p.erab;
                count_rab += 1;
            } else {
                dlr += -p.erab;
                count_dlr += 1;
            }
        }
        let variation: f64 = series.windows(2).map(|w| (w[1].total - w[0].total).abs()).sum();
        let denom = n.max(1) as f64;
        MetricsReport {
            epochs: n,
            avg_rab: rab / denom,
            avg_dlr: dlr / denom,
            count_rab,
            count_dlr,
            mean_erab: sum / denom,
            avg_bw_variation: if n > 1 { variation / (n - 1) as f64 } else { 0.0 },
            final_search_time_ms: 0.0,
            series,
        }
    }

    pub fn from_records(records: &[EpochRecord<f64>]) -> Self {
        let mut report = Self::from_series(
            records
                .iter()
                .map(|r| SeriesPoint {
                    epoch: r.outcome.epoch,
                    rate: r.outcome.source_rate,
                    total: r.total,
                    erab: r.outcome.erab,
                })
                .collect(),
        );
        report.final_search_time_ms = records.last().map_or(0.0, |r| r.search_ms);
        report
    }

    /// Metrics over epochs `from..` of this report's series.
    pub fn window(&self, from: usize) -> Self {
        let mut w = Self::from_series(self.series.iter().copied().filter(|p| p.epoch >= from).collect());
        w.final_search_time_ms = self.final_search_time_ms;
        w
    }

    /// Checks `avg_rab·N = Σ max(0, ERAB)` and `avg_dlr·N = Σ max(0, −ERAB)`
    /// against the series, to relative precision `tol`.
    pub fn reconciles(&self, tol: f64) -> bool {
        let n = self.epochs.max(1) as f64;
        let pos: f64 = self.series.iter().filter(|p| p.erab >= 0.0).map(|p| p.erab).sum();
        let neg: f64 = self.series.iter().filter(|p| p.erab < 0.0).map(|p| -p.erab).sum();
        let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));
        self.avg_rab >= 0.0
            && self.avg_dlr >= 0.0
            && self.count_rab + self.count_dlr == self.epochs
            && close(self.avg_rab * n, pos)
            && close(self.avg_dlr * n, neg)
            && close((self.avg_rab - self.avg_dlr) * n, self.series.iter().map(|p| p.erab).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(epoch: usize, total: f64, erab: f64) -> SeriesPoint {
        SeriesPoint {
            epoch,
            rate: total - erab,
            total,
            erab,
        }
    }

    #[test]
    fn averages_over_all_epochs() {
        let m = MetricsReport::from_series(vec![pt(0, 45.0, 5.0), pt(1, 38.0, -2.0), pt(2, 41.0, 1.0), pt(3, 40.0, 0.0)]);
        assert_eq!(m.epochs, 4);
        assert_eq!(m.avg_rab, 6.0 / 4.0);
        assert_eq!(m.avg_dlr, 2.0 / 4.0);
        assert_eq!((m.count_rab, m.count_dlr), (3, 1));
        assert_eq!(m.mean_erab, 1.0);
        assert_eq!(m.avg_bw_variation, (7.0 + 3.0 + 1.0) / 3.0);
        assert!(m.reconciles(1e-12));
        let w = m.window(2);
        assert_eq!(w.epochs, 2);
        assert_eq!(w.avg_bw_variation, 1.0);
    }

    #[test]
    fn empty_and_single() {
        let m = MetricsReport::from_series(vec![]);
        assert_eq!((m.avg_rab, m.avg_dlr, m.avg_bw_variation), (0.0, 0.0, 0.0));
        let m = MetricsReport::from_series(vec![pt(0, 10.0, -3.0)]);
        assert_eq!(m.avg_bw_variation, 0.0);
        assert_eq!(m.avg_dlr, 3.0);
    }
}
