// Minimal use of the library: DDS-KDE on the 100-D linear projection domain,
// printing archive coverage as the search spreads out.
#include <dds/dds.hpp>

#include <iostream>

int main()
{
    const dds::LinearProjection domain(100);
    const dds::Tessellation archive = dds::GridTessellation(domain.feature_lower(), domain.feature_upper(), {100, 100});

    dds::AlgorithmConfig config = dds::default_config(dds::AlgorithmKind::dds_kde, dds::DomainKind::lp);
    config.iterations = 200;
    config.emitters = 5;
    config.seed = 7;

    const dds::RunRecord record = dds::run_dds_kde(config, domain, archive, [](const dds::MetricsSnapshot& s) {
        if (s.iteration % 25 == 0)
            std::cout << "iteration " << s.iteration << ": coverage " << s.coverage << ", cross-entropy " << s.cross_entropy << '\n';
    });
    std::cout << record.history.back().occupied_cells << " of " << archive.cell_count() << " cells reached after "
              << record.history.back().evaluations << " evaluations\n";

    // The same density estimator on its own.
    dds::KdeEstimator kde(0.5, dds::KernelKind::gaussian);
    std::vector<dds::FeatureVector> seen;
    for (double x : {0., 0.2, 0.4, 3.})
        seen.push_back(dds::FeatureVector::Constant(2, x));
    kde.refresh(seen);
    std::cout << "density near the cluster " << kde.query(dds::FeatureVector::Constant(2, 0.2)) << ", near the outlier "
              << kde.query(dds::FeatureVector::Constant(2, 3.)) << '\n';
}
