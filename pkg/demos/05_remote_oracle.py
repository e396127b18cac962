"""Explaining a game that lives behind a socket.

Real similarity functions run inside model servers, so the library
speaks a one-line-JSON protocol: the server opens with a handshake, the
client sends batches of mask bitstrings, values come back in order.
This script serves a synthetic game over TCP in a background thread,
probes it for conformance, and fits an explanation through the wire,
checking the result against a local fit over the same masks.
"""

import threading

import numpy as np

from interax import (
    BasisSpec,
    OracleClient,
    PlayerSpace,
    SamplePlan,
    check_oracle,
    fit,
    make_random_game,
    make_tcp_server,
    sample,
)


def main():
    space = PlayerSpace(4, 4)
    game = make_random_game(space, kind="tabulated", seed=55)
    server = make_tcp_server(game, port=0, max_batch=256,
                             extra_handshake={"model": "synthetic-demo"})
    host, port = server.server_address
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    print(f"serving a {space.n_image}+{space.n_text} game on {host}:{port}")

    with OracleClient.connect_tcp(host, port, memoize=True) as client:
        print(f"handshake: {client.handshake}")

        print("\n-- conformance probes ----------------------------------")
        report = check_oracle(client)
        for check in report.checks:
            status = "pass" if check["passed"] else "FAIL"
            print(f"  [{status}] {check['name']}: {check['detail']}")

        print("\n-- fitting through the wire ------------------------------")
        batch = sample(SamplePlan(space, 0.5, "naive", seed=2, m=512))
        remote_values = client.evaluate_matrix(batch.matrix)
        local_values = game.evaluate_matrix(batch.matrix)
        print(f"remote and local values agree: "
              f"{bool(np.array_equal(remote_values, local_values))}")
        expl = fit(batch, remote_values, BasisSpec.full(space), p=0.5)
        print(f"fitted constant {expl.constant:+.4f}, "
              f"residual mse {expl.diagnostics['residual_mse']:.3e}")

    server.shutdown()
    server.server_close()
    print("\nthe same traffic works across languages: any process that")
    print("prints the handshake and answers {id, masks} with {id, values}")
    print("is an oracle this library can explain.")


if __name__ == "__main__":
    main()
