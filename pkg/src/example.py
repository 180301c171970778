import logging

from sgnnlab import (
    SgnnModel,
    TrainConfig,
    make_candidate,
    make_rng,
    measure_epoch_time,
    sample_dataset,
    sgnn_to_grbfnn,
    train,
)


def main():
    """
    Trains a small SGNN on the exponential-square sum and checks that its
    GRBFNN expansion reproduces the trained network.
    """
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    print("--- sgnn-lab demo ---")

    rng = make_rng(7)
    f = make_candidate(3, dim=2)
    print(f"Target: f{f.id} ({f.name}, {f.feature}) in {f.dim} dimensions")

    dataset = sample_dataset(f, 2048, rng)
    model = SgnnModel.initialize(2, 20, -8.0, 8.0, rng)
    print(f"Model: {model!r}")

    report = train(model, dataset, TrainConfig(batch_size=64, seed=7))
    print(f"Stopped after {report.epochs_run} epochs ({report.stop_reason.value})")
    print(f"Final validation MSE: {report.final_val_loss:.3e}")
    if report.epochs_run >= 2:
        print(f"Seconds per epoch: {measure_epoch_time(report):.4f}")

    expanded = sgnn_to_grbfnn(model)
    sample = dataset.val_inputs[:5]
    print(f"Expanded into {expanded.n_units} Gaussian units")
    for x, a, b in zip(sample, model.predict(sample), expanded.predict(sample)):
        print(f"  x={x.round(3)}  sgnn={a:+.6f}  grbfnn={b:+.6f}")


if __name__ == "__main__":
    main()
